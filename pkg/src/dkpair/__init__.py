"""Character pairings and torsion-valued pairings for K-classes of graded
algebras of matrix-valued torus functions tensored with Clifford factors.

Applications: winding and Chern numbers, the spin Chern number and the
Kane-Mele Z2 invariant, and Z2 invariants of periodically driven models.
"""

from .clifford import (CliffordSignature, Multivector, gamma_element,
                       j_functional, mu, mv_mul, mv_star, real_structure_l)
from .grid_alg import (AlgElement, Derivation, RealStructureSpec, TorusGrid,
                       alg_mul, alg_star, apply_derivation,
                       apply_real_structure, check_invariance, direct_sum,
                       hermitian_calculus, psi_e, psi_e_inverse, trace,
                       unitary_exp)
from .kclass import (BasePoint, GapClosedError, LoopElement, OsuElement,
                     OsuValidationError, bott_loop, exp_projection_loop,
                     flatten, make_osu_from_hamiltonian, osu_validate,
                     torsion_loop)
from .pairing import (MODULUS_KANE_MELE_CH2, MODULUS_KO2_CH0, CycleSpec,
                      PairingValue, SelectionRule, TorsionValue, ch0, ch1,
                      ch2, chern_number, integer_check, pair, pair_suspended,
                      pimsner_constant, selection_rule, spin_chern,
                      torsion_pairing_closed_form, torsion_pairing_via_loop,
                      winding_number)
from .floquet import (ArcProjection, BranchChoice, FloquetDrive,
                      arc_projection, branch_pair, check_time_reversal,
                      decoupled_contraction, degree_t3, effective_hamiltonian,
                      evolve, kane_mele_floquet_invariant,
                      periodized_evolution, tri_symmetry_residual)

__version__ = "0.1.0"
