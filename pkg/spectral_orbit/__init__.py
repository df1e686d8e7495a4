# makes "spectral_orbit" a package; the names below are the public surface
from .errors import SpectralOrbitError, ValidationError, NumericalFailure
from .curve_core import (
    INF, CurvePoint, CurveSpec, IntersectionTable,
    antipodal, eta, rotate_markers, validate_curve,
)
from .theta_engine import (
    Gluing, JacobianPoint, ThetaExpansion,
    build_xi, enumerate_regular_subsets, theta_det, theta_expansion, theta_flow_logderiv, theta_pq,
)
from .jacobian_sections import (
    CocycleData, DefiniteReport, Divisor, Section, SectionFrame, Verdict,
    abel_map, cocycle_to_point, distinguished_sections, hermitian_pair, is_definite, lambda_F,
    section_vanishing_at,
)
from .beauville_frames import (
    FrameReport, MatricialPolynomial,
    frame_checks, jacobian_from_frame, orbit_point, polynomial_from_frame, sigma_q, unitarity_residual,
    unitary_frame,
)
from .nahm_flow import (
    FlowSample, NahmTrajectory,
    compare_flows, flow_point, flow_trace, integrate_nahm, lax_rhs, nahm_rhs,
)
from .kahler_potential import (
    OrbitParameters,
    delta, eguchi_hanson_identity_residual, eguchi_hanson_reference, eguchi_hanson_theta,
    hitchin_residual, kahler_potential, kahler_potential_quadrature,
)
