from .handle import (AxiomReport, CocycleHandle, HomogeneityReport, check_2homog,
                     check_cocycle_axioms, cube_signs, direction_cubes)
from .linsys import (CoboundaryVerdict, EquationSystem, assemble_equations, decide_coboundary,
                     equations_for, solve_mod, solve_torus, verify_certificate)
from .potential import potential_finder, solve_phi, strong_potential_finder

__all__ = [
    'AxiomReport', 'CocycleHandle', 'HomogeneityReport', 'check_2homog', 'check_cocycle_axioms',
    'cube_signs', 'direction_cubes', 'CoboundaryVerdict', 'EquationSystem', 'assemble_equations',
    'decide_coboundary', 'equations_for', 'solve_mod', 'solve_torus', 'verify_certificate',
    'potential_finder', 'solve_phi', 'strong_potential_finder',
]
