import argparse
import json
import sys
import textwrap
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import jsonschema
import numpy as np
from rich.console import Console

from . import __version__
from . import rho as rho_mod
from .cocycle import (CocycleHandle, decide_coboundary, potential_finder,
                      strong_potential_finder)
from .cubes import FilteredGroup
from .experiments import equidistribution, measurability_probe
from .gowers import (correlation, correlation_exact, gowers_norm, limiting_constant,
                     poly_norm_one_certificate)
from .poly import FuncTable, PolyRep, Z4Poly
from .polyio import format_pq, format_table, read_any
from .util.config import Forge
from .util.errors import DegreeViolation, NilforgeError, PreconditionViolation
from .util.logging import ForgeLog
from .util.parallel import spawn_rngs
from .util.text import format_limited, to_jsonable
from .x5r import MAX_R, QuadPair, PseudoQuintic, lift, sample_ncube, x5_cube_check

SCHEMA = Path(__file__).parent / 'data' / 'report.schema.json'

console = Console(highlight=False)


class RichArgParser(argparse.ArgumentParser):
    def __init__(self, *args: Any, **kwargs: Any):
        self.console = Console(highlight=False)
        super().__init__(*args, **kwargs)

    def _print_message(self, message: Optional[str], file: Any = None) -> None:
        if message:
            self.console.print(message)


class ForgeArgumentFormatter(argparse.HelpFormatter):
    # Keep description line breaks.
    def _fill_text(self, text, width, indent):
        return "".join(indent + line for line in text.splitlines(keepends=True))

    def _split_lines(self, text, width):
        return text.splitlines()

    # Append defaults unless the help is multiline or already shows one.
    def _get_help_string(self, action):
        help = action.help or ""
        if "\n" not in help and "%(default)" not in help:
            if action.default is not argparse.SUPPRESS and action.default is not None:
                if action.option_strings:
                    help += " (default: %(default)s)"
        return help


def _as_table(obj) -> FuncTable:
    if isinstance(obj, FuncTable):
        return obj
    if isinstance(obj, PolyRep):
        return obj.to_table()
    if isinstance(obj, Z4Poly):
        return obj.torus_table()
    if isinstance(obj, PseudoQuintic):
        return obj.func_table()
    raise PreconditionViolation(f'cannot read {type(obj).__name__} as a function')


def _poly_or_table(path: str):
    obj = read_any(path)
    return obj if isinstance(obj, PolyRep) else _as_table(obj)


# -- commands ----------------------------------------------------------------
# Each takes the parsed arguments, the configuration and the resolved seed and
# returns (results, ok).

def cmd_verify_rho(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    cx = rho_mod.default()
    if args.inject_fault:
        cx = cx.with_fault(args.inject_fault)
    report = rho_mod.verify_rho(config.samples, seed, cx)
    if not report['ok']:
        for name in ('symmetry', 'cocycle', 'strong_homogeneity'):
            if not report[name]['ok']:
                console.print(f'*** {name.replace("_", " ")} certificate failed')
                break
        else:
            console.print('*** non-coboundary certificate failed')
    if config.samples == 0:
        console.print('*** structural checks only; sampled sweeps skipped')
    return report, report['ok']


def _target(text: str):
    return 'torus' if text == 'torus' else int(text)


def cmd_coboundary(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    system = None
    if args.f:
        F = _as_table(read_any(args.f))
        handle = CocycleHandle.from_coboundary(FilteredGroup.cube_coordinates(F.n), F, args.k,
                                               name=Path(args.f).name)
    elif args.cocycle == 'trilinear':
        handle = rho_mod.trilinear_cocycle()
    else:
        handle = rho_mod.rho_handle()
        system = rho_mod.descended_system(rho_mod.default())
    verdict = decide_coboundary(handle, _target(args.target), config.samples, seed,
                                config.exhaustive_limit, system)
    return {'cocycle': handle.name, 'k': handle.k, 'verdict': verdict.to_json()}, \
        verdict.decision != 'inconclusive'


def cmd_potential(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    if args.f:
        F0 = _as_table(read_any(args.f))
        handle = CocycleHandle.from_coboundary(FilteredGroup.cube_coordinates(F0.n), F0, args.k,
                                               name=Path(args.f).name)
    else:
        handle = rho_mod.trilinear_cocycle()
    if args.psi:
        F = strong_potential_finder(handle, _as_table(read_any(args.psi)), config.exhaustive_limit)
    else:
        F = potential_finder(handle, config.exhaustive_limit)
    text = format_table(F)
    if args.table_out:
        Path(args.table_out).write_text(text)
        console.print(f'*** potential written to {args.table_out}')
    return {'cocycle': handle.name, 'k': handle.k, 'level': F.level,
            'table': text.splitlines()}, True


def cmd_lift(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    paths = args.q.split(',')
    if len(paths) != 2:
        raise PreconditionViolation(f'--q needs two files separated by a comma, got {args.q!r}')
    Q = QuadPair(_as_poly(paths[0]), _as_poly(paths[1]))
    S = lift(Q, args.r)
    check = x5_cube_check(Q, S, args.r, max(1, config.samples), seed)
    text = format_pq(S)
    if args.out:
        Path(args.out).write_text(text)
        console.print(f'*** lift written to {args.out}')
    return {'n': Q.n, 'r': args.r, 'pseudo_quintic': text.splitlines(),
            'cube_check': check.to_json()}, check.ok


def _as_poly(path: str) -> PolyRep:
    obj = read_any(path)
    if isinstance(obj, PolyRep):
        return obj
    return PolyRep.from_table(_as_table(obj).with_level(1), 2)


def _norm_record(phase, n: int, k: int, engine: str, threads: int) -> dict:
    start = time.perf_counter()
    norm = gowers_norm(phase, k, engine, threads)
    return {'norm': norm, 'engine': engine, 'n': n, 'k': k, 'elapsed': time.perf_counter() - start}


def cmd_gowers(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    engines = ['naive', 'recursive'] if args.engine == 'both' else [args.engine]
    if args.f:
        phase = _poly_or_table(args.f)
        records = [_norm_record(phase, phase.n, args.k, e, config.threads) for e in engines]
        # a single engine reports its record as the result itself
        results: Dict[str, Any] = dict(records[0]) if len(records) == 1 else {'records': records}
        if isinstance(phase, PolyRep):
            results['norm_one_certificate'] = poly_norm_one_certificate(phase, args.k)
        ok = True
        if len(records) == 2:
            results['agree'] = abs(records[0]['norm'] - records[1]['norm']) <= config.tolerance
            ok = results['agree']
    else:
        records = []
        for i, rng in enumerate(spawn_rngs(seed, args.count)):
            _, S = sample_ncube(args.n, args.r, rng)
            records.extend(dict(_norm_record(S, args.n, args.k, e, config.threads), sample=i)
                           for e in engines)
        results = {'n': args.n, 'k': args.k, 'records': records}
        ok = all(rec['norm'] > 0 for rec in records)
    if args.constant:
        mean, root = limiting_constant()
        results['limiting_constant'] = {'mean': str(mean), 'root': root}
    return results, ok


def cmd_correlate(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    if args.f:
        if not args.p:
            raise PreconditionViolation('--f needs a polynomial to correlate against (--p)')
        f, P = _poly_or_table(args.f), _poly_or_table(args.p)
        exact = correlation_exact(f, P)
        return {'correlation': correlation(f, P),
                'exact': None if exact is None else str(exact)}, True
    values = []
    for rng in spawn_rngs(seed, args.trials):
        _, S = sample_ncube(args.n, args.r, rng)
        values.append(correlation(S, S.P))
    return {'n': args.n, 'r': args.r, 'trials': args.trials, 'values': values,
            'mean': float(np.mean(values))}, True


def cmd_equid(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    report = equidistribution(args.n, args.M, args.d, config.samples, seed, config.threads)
    return report.to_json(), report.outside == 0


def cmd_probe(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    report = measurability_probe(args.n, args.M, args.r, seed)
    ok = all(run['control'] == 0 and run['constant_control'] == 0 for run in report['runs'])
    return report, ok


def cmd_degree(args, config: Forge, seed: int) -> Tuple[dict, bool]:
    table = _as_table(read_any(args.f))
    full = PolyRep.from_table(table, max(table.n + table.level - 1, 0))
    results: Dict[str, Any] = {'n': table.n, 'level': table.level, 'k': args.k,
                               'true_degree': full.true_degree()}
    try:
        P = PolyRep.from_table(table, args.k)
        results['degree_at_most_k'] = True
        results['certificate'] = {'moebius_coefficients': len(P.coeffs) + bool(P.alpha),
                                  'd_k_plus_1_vanishes': True}
    except DegreeViolation as exc:
        results['degree_at_most_k'] = False
        results['certificate'] = {'index_set': list(exc.index_set or ()), 'value': str(exc.value)}
    return results, True


COMMANDS: Dict[str, Callable] = {
    'verify-rho': cmd_verify_rho,
    'coboundary': cmd_coboundary,
    'potential': cmd_potential,
    'lift': cmd_lift,
    'gowers': cmd_gowers,
    'correlate': cmd_correlate,
    'equid': cmd_equid,
    'probe': cmd_probe,
    'degree': cmd_degree,
}

# --out names the file these commands produce; their report goes to stdout
ARTIFACT_COMMANDS = {'lift'}


def build_parser() -> RichArgParser:
    description = textwrap.dedent(
        r"""
            [b]nilforge[/b]: exact arithmetic for non-classical polynomials on F_2^n,
            the cocycle rho on the Klein nilspace and the pseudo-quintic nilspaces X_{5,r}.
        """
    ).strip()
    common = argparse.ArgumentParser(add_help=False, formatter_class=ForgeArgumentFormatter)
    common.add_argument('--seed', type=int, help='RNG seed; drawn and printed when absent')
    common.add_argument('--samples', type=int, help='random instances for sampled checks')
    common.add_argument('--threads', type=int, help='worker threads (env NILFORGE_THREADS)')
    common.add_argument('--out', type=str, help='write the JSON report here instead of stdout; lift writes its pseudo-quintic here')
    common.add_argument('--log', nargs='?', const='', default=None,
                        help='append a YAML run log, optionally to the given file')
    common.add_argument('--tag', type=str, help='free text copied into the run log')

    parser = RichArgParser(prog='nilforge', description=description,
                           formatter_class=ForgeArgumentFormatter)
    parser.add_argument('--version', action='version', version=f'nilforge {__version__}')
    sub = parser.add_subparsers(dest='command', required=True, metavar='command')

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common], formatter_class=ForgeArgumentFormatter)

    p = add('verify-rho', 'certify rho: cocycle, strongly 2-homogeneous, not a coboundary')
    p.add_argument('--inject-fault', choices=['partition', 'psi'], help=argparse.SUPPRESS)

    p = add('coboundary', 'decide whether a cocycle is a coboundary, with a certificate')
    p.add_argument('--cocycle', choices=['rho', 'trilinear'], default='rho', help='built-in cocycle')
    p.add_argument('--f', type=str, help='use d^{k+1}F for this function file instead')
    p.add_argument('--k', type=int, default=2, help='cocycle order when --f is given')
    p.add_argument('--target', type=str, default='torus', help="'torus' or a level r")

    p = add('potential', 'find F with d^{k+1}F equal to a 2-homogeneous cocycle on D^1(F_2^n)')
    p.add_argument('--f', type=str, help='cocycle d^{k+1}F of this function file (default: trilinear)')
    p.add_argument('--k', type=int, default=2, help='cocycle order')
    p.add_argument('--psi', type=str, help='edge function; switches to the (1/2)Z/Z-valued finder')
    p.add_argument('--table-out', type=str, help='write the potential as a CSV table')

    p = add('lift', 'lift a pair of quadratics to an n-cube of X_{5,r}')
    p.add_argument('--q', type=str, required=True, help='Q1 and Q2 as POLY files, comma separated')
    p.add_argument('--r', type=int, default=MAX_R, help='level of S')

    p = add('gowers', 'Gowers U^{k+1} norms of a phase or of sampled pseudo-quintics')
    p.add_argument('--f', type=str, help='phase as a POLY, table or pseudo-quintic file')
    p.add_argument('--k', type=int, default=5, help='computes U^{k+1}')
    p.add_argument('--engine', choices=['naive', 'recursive', 'both'], default='recursive',
                   help='evaluation engine')
    p.add_argument('--n', type=int, default=4, help='dimension of sampled cubes')
    p.add_argument('--r', type=int, default=MAX_R, help='level of sampled cubes')
    p.add_argument('--count', type=int, default=10, help='number of sampled cubes')
    p.add_argument('--constant', action='store_true', help='also report the limiting constant')

    p = add('correlate', '|E e(f - P)|, or its average over sampled (S, P)')
    p.add_argument('--f', type=str, help='phase file')
    p.add_argument('--p', type=str, help='polynomial file')
    p.add_argument('--n', type=int, default=12, help='dimension of sampled cubes')
    p.add_argument('--r', type=int, default=MAX_R, help='level of sampled cubes')
    p.add_argument('--trials', type=int, default=20, help='number of sampled cubes')

    p = add('equid', 'total variation of sampled restricted cubes against uniform on Sigma')
    p.add_argument('--n', type=int, default=12, help='dimension of the sampled cube')
    p.add_argument('--M', type=int, default=1, help='pinned directions')
    p.add_argument('--d', type=int, default=1, help='random directions')

    p = add('probe', 'approximate e(P) by functions of pinned translates of S')
    p.add_argument('--n', type=int, default=16, help='dimension')
    p.add_argument('--M', type=int, default=1, help='pinned directions')
    p.add_argument('--r', type=int, default=MAX_R, help='level of S')

    p = add('degree', 'exact degree certificate for a polynomial file or table')
    p.add_argument('--f', type=str, required=True, help='POLY file or CSV table')
    p.add_argument('--k', type=int, required=True, help='degree bound to certify')
    return parser


def _configure(args) -> Forge:
    config = Forge()
    for name in ('seed', 'samples', 'threads', 'tag'):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    if args.log is not None:
        config.debug = True
        if args.log:
            config.log = args.log
    return config


def validate_report(report: dict) -> None:
    schema = json.loads(SCHEMA.read_text())
    jsonschema.validate(report, schema)


def run(argv: List[str]) -> int:
    args = build_parser().parse_args(argv)
    config = _configure(args)
    drawn = config.seed < 0
    seed = config.resolve_seed()
    if drawn:
        console.print(f'*** using seed {seed}')
    log = ForgeLog(config, __version__) if config.debug else None
    params = {k: v for k, v in vars(args).items()
              if k not in ('command', 'out', 'log', 'tag', 'inject_fault')}
    params.update(seed=seed, samples=config.samples, threads=config.threads)
    start = time.perf_counter()
    try:
        results, ok = COMMANDS[args.command](args, config, seed)
    except NilforgeError as e:
        console.print(f'*** {e}', markup=False)
        diagnostic = getattr(e, 'diagnostic', None)
        if diagnostic:
            console.print(f'*** {format_limited(diagnostic)}', markup=False)
        if log:
            log.release()
        return 1
    elapsed_ms = int((time.perf_counter() - start) * 1000)
    report = to_jsonable({
        'command': args.command,
        'params': params,
        'seed': seed,
        'version': __version__,
        'ok': bool(ok),
        'results': results,
        'elapsed_ms': elapsed_ms,
    })
    validate_report(report)
    text = json.dumps(report, indent=2)
    if args.out and args.command not in ARTIFACT_COMMANDS:
        Path(args.out).write_text(text + '\n')
        console.print(f'*** {args.command}: {"ok" if ok else "FAILED"} ({elapsed_ms} ms), '
                      f'report in {args.out}', markup=False)
    else:
        sys.stdout.write(text + '\n')
    if log:
        log.step(args.command, report['params'], report['results'], elapsed_ms)
        log.dump()
    return 0 if ok else 1
