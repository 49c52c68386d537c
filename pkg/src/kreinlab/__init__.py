"""krein-lab: measure-weighted Laplace eigenproblems on planar domains
and sphere charts, with nodal-domain and Green-operator verification."""

from ._backend import BACKEND
from .assemble import (Pencil, assemble_measure_mass, assemble_stiffness,
                       assemble_stiffness_embedded, build_pencil, dump_matrix)
from .conformal import (StereoChart, jacobian_inverse_det, pullback_function,
                        pushforward_measure, stereo_forward, stereo_inverse)
from .green import (DiskDirichlet, PlanarBump, RectangleDirichlet,
                    SphereBump, SphereClosed, c2_constant,
                    fixed_point_residual, green_apply, kernel_eval,
                    verify_distributional_identity)
from .measure import (AffineMap, AreaMeasure, DimEstimate, DiskDomain,
                      IFSMeasure, LineMeasure, PushforwardMeasure,
                      QuadratureError, RectDomain, Segment, SphereDomain,
                      SumMeasure, ball_mass, cantor_measure, cross_measure,
                      estimate_dim_infinity, integrate_on_element,
                      measure_config, parse_measure_config, scaled,
                      total_mass)
from .mesh import (Chart, P1Field, TriMesh, gen_disk, gen_hemisphere_chart,
                   gen_rectangle, gen_sphere, read_mesh, write_mesh)
from .nodal import (CourantReport, NodalDecomposition, courant_check,
                    nodal_components)
from .spectral import (EigenPair, eigen_clusters, rayleigh_quotient,
                       solve_dirichlet_source, solve_eigenpairs)

__version__ = "0.1.0"
