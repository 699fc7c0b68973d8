"""Breadth, incompressible families and level-type certificates for
union-closed set systems."""

from .canonical import (AbstractSemilattice, Spread, binary_tree_semilattice, canonical_family,
                        cayley_embed, chain_system, free_semilattice, spread_standard,
                        table_of_system)
from .classify import (TypeCertificate, chain_to_tmax, condition_probe, detect_type,
                       transfer_spread, verify_certificate)
from .oracle import builtin, snapshot
from .ramsey import (Colouring, decisive_check, dichotomy_search, gamma_partition,
                     halving_iteration, realize_finite_semilattice, shatter_check)
from .setsys import (GroundWindow, Member, SetSystem, breadth_at_least, breadth_exact,
                     find_witness, is_compressible, restrict, verify_witness)

__version__ = "0.1.0"
