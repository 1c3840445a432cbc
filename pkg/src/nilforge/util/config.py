import os

import numpy as np
from traitlets import Bool, Float, Int, Unicode
from traitlets.config import Configurable


def forge_get_env(option_name, default_value):
    env_name = 'NILFORGE_' + option_name.upper()
    v = os.getenv(env_name, str(default_value))
    if type(default_value) == int:
        return int(v)
    elif type(default_value) == float:
        return float(v)
    elif type(default_value) == bool:
        return v.lower() == 'true'
    else:
        return v


class Forge(Configurable):
    seed = Int(forge_get_env('seed', -1),
               help="RNG seed; negative means draw one and report it").tag(config=True)
    samples = Int(forge_get_env('samples', 100000),
                  help="number of random instances for sampled checks").tag(config=True)
    threads = Int(forge_get_env('threads', 1),
                  help="worker threads for sweeps and samplers").tag(config=True)
    exhaustive_limit = Int(forge_get_env('exhaustive_limit', 1 << 24),
                           help="largest parameter space swept exhaustively").tag(config=True)
    tolerance = Float(forge_get_env('tolerance', 1e-9),
                      help="tolerance for floating comparisons").tag(config=True)
    log = Unicode(forge_get_env('log', 'nilforge.log.yaml'),
                  help="The run log file").tag(config=True)
    debug = Bool(forge_get_env('debug', False),
                 help="Write the run log").tag(config=True)
    tag = Unicode(forge_get_env('tag', ''),
                  help="Any extra info for log file").tag(config=True)

    def resolve_seed(self):
        """Return the configured seed, drawing and remembering a fresh one if unset."""
        if self.seed < 0:
            self.seed = int(np.random.SeedSequence().entropy % (1 << 63))
        return self.seed

    def to_json(self):
        """Serialize the object to a JSON string."""
        return {
            'seed': self.seed,
            'samples': self.samples,
            'threads': self.threads,
            'exhaustive_limit': self.exhaustive_limit,
            'tolerance': self.tolerance,
            'log': self.log,
            'debug': self.debug,
            'tag': self.tag,
        }
