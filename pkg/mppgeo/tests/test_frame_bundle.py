"""
Test suite for frame bundle geometry
Cometric blocks, the MPP Hamiltonian flow, development and path diagnostics
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

try:
    from app.errors import ChartExitError, FrameDegeneracyError, NonHorizontalPathError
    from app.models import ChartManifold, CotangentState, FramePoint, IntegratorConfig, LandmarkSpec, SurfaceSpec, Trajectory
    from app.services.frame_bundle import (
        antidevelop,
        cometric_blocks,
        covariant_acceleration,
        develop,
        frame_coordinates,
        hamiltonian,
        hamiltonian_drift,
        horizontality_residual,
        integrate_mpp,
        mpp_rhs,
        sub_riemannian_energy,
    )
    from app.services.geometry import orthonormal_frame, parallel_transport, riemannian_geodesic
    from app.services.jets import Jet
    from app.services.landmarks import make_landmark_manifold
    from app.services.surfaces import make_surface
except ImportError:
    from mppgeo.app.errors import ChartExitError, FrameDegeneracyError, NonHorizontalPathError
    from mppgeo.app.models import ChartManifold, CotangentState, FramePoint, IntegratorConfig, LandmarkSpec, SurfaceSpec, Trajectory
    from mppgeo.app.services.frame_bundle import (
        antidevelop,
        cometric_blocks,
        covariant_acceleration,
        develop,
        frame_coordinates,
        hamiltonian,
        hamiltonian_drift,
        horizontality_residual,
        integrate_mpp,
        mpp_rhs,
        sub_riemannian_energy,
    )
    from mppgeo.app.services.geometry import orthonormal_frame, parallel_transport, riemannian_geodesic
    from mppgeo.app.services.jets import Jet
    from mppgeo.app.services.landmarks import make_landmark_manifold
    from mppgeo.app.services.surfaces import make_surface


def surface(kind):
    return make_surface(SurfaceSpec(kind=kind))


def symplectic_gradient(M, z, low_rank=None, h=1e-6):
    """J∇H by central differences of the Hamiltonian in the flat layout"""
    p = z.point
    d, k, lam = p.d, p.k, p.lam
    v = z.to_vector()
    H = lambda w: hamiltonian(M, CotangentState.from_vector(w, d, k, lam), low_rank)
    grad = np.empty_like(v)
    for i in range(v.shape[0]):
        e = np.zeros_like(v)
        e[i] = h
        grad[i] = (H(v + e) - H(v - e)) / (2 * h)
    n = d + d * k
    return np.concatenate([grad[n:], -grad[:n]])


def anisotropic_state(M, x, scales=(1.0, 0.5), xi_x=(0.6, -0.3), xi_u=((0.1, -0.2), (0.05, 0.15)), lam=0.0):
    u = orthonormal_frame(M, x) @ np.diag(scales)
    return CotangentState(FramePoint(x, u, lam), np.array(xi_x), np.array(xi_u))


class TestCometricBlocks:
    """Test cases for the frame bundle cometric"""

    def test_plane_identity_frame(self):
        """Test W = I and vanishing mixed blocks in the flat plane"""
        blocks = cometric_blocks(surface("plane"), FramePoint(np.zeros(2), np.eye(2)))
        np.testing.assert_array_equal(blocks.W, np.eye(2))
        np.testing.assert_array_equal(blocks.Gxu, np.zeros((2, 4)))
        np.testing.assert_array_equal(blocks.Guu, np.zeros((4, 4)))

    def test_scaled_frame(self):
        """Test W = u uᵀ = diag(4, 1) for u = diag(2, 1)"""
        blocks = cometric_blocks(surface("plane"), FramePoint(np.zeros(2), np.diag([2.0, 1.0])))
        np.testing.assert_allclose(blocks.W, np.diag([4.0, 1.0]))

    def test_low_rank_semidefinite(self):
        """Test symmetry, semidefiniteness and rank ≤ d of the assembled cometric"""
        M = surface("sphere")
        s = FramePoint(np.array([0.3, -0.2]), np.array([0.4, 0.1]), lam=0.1)
        G = cometric_blocks(M, s).assembled()
        assert G.shape == (4, 4)
        np.testing.assert_allclose(G, G.T, atol=1e-14)
        assert np.linalg.eigvalsh(G).min() > -1e-12
        assert np.linalg.matrix_rank(G, tol=1e-10) <= 2

    def test_gamma_matrix_layout(self):
        """Test that the matrix form of Γ_frame follows the column-major (h, γ) order"""
        M = surface("ellipsoid")
        s = FramePoint(np.array([0.2, 0.5]), np.array([[0.9, 0.2], [-0.1, 1.1]]))
        blocks = cometric_blocks(M, s)
        for h in range(2):
            for g in range(2):
                np.testing.assert_allclose(blocks.gamma_matrix[g * 2 + h], blocks.gamma_frame[h, g])

    def test_rank_deficient_frame(self):
        """Test that a singular frame is rejected"""
        with pytest.raises(FrameDegeneracyError):
            cometric_blocks(surface("plane"), FramePoint(np.zeros(2), np.array([[1.0, 2.0], [2.0, 4.0]])))

    def test_low_rank_needs_isotropic_weight(self):
        """Test that a rank-deficient frame without λ is rejected"""
        with pytest.raises(FrameDegeneracyError):
            cometric_blocks(surface("plane"), FramePoint(np.zeros(2), np.array([1.0, 0.0])))


class TestHamiltonian:
    """Test cases for the MPP Hamiltonian and its vector field"""

    def test_values(self):
        """Test H on flat frames against ½ ηᵀ u uᵀ η"""
        M = surface("plane")
        identity = FramePoint(np.zeros(2), np.eye(2))
        scaled = FramePoint(np.zeros(2), np.diag([2.0, 1.0]))
        assert hamiltonian(M, CotangentState(identity, [1.0, 0.0], np.zeros((2, 2)))) == pytest.approx(0.5)
        assert hamiltonian(M, CotangentState(identity, [0.0, 0.0], np.ones((2, 2)))) == pytest.approx(0.0)
        assert hamiltonian(M, CotangentState(scaled, [1.0, 0.0], np.zeros((2, 2)))) == pytest.approx(2.0)

    def test_plane_vector_field(self):
        """Test the flat flow ẋ = uuᵀξ, ξ̇_u = −ξ(uᵀξ)ᵀ"""
        M = surface("plane")
        z = CotangentState(FramePoint(np.zeros(2), np.eye(2)), [1.0, 2.0], np.zeros((2, 2)))
        expected = [1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, -2.0, -2.0, -4.0]
        np.testing.assert_allclose(mpp_rhs(M, z), expected, atol=1e-15)

    @pytest.mark.parametrize("kind", ["sphere", "ellipsoid", "hyperbolic"])
    def test_symplectic_gradient_surfaces(self, kind):
        """Test that the explicit vector field equals J∇H"""
        M = surface(kind)
        z = anisotropic_state(M, np.array([0.3, -0.25]))
        np.testing.assert_allclose(mpp_rhs(M, z), symplectic_gradient(M, z), atol=1e-6)

    def test_symplectic_gradient_low_rank(self):
        """Test J∇H with the λ-weighted isotropic part"""
        M = surface("ellipsoid")
        x = np.array([0.1, 0.4])
        z = CotangentState(FramePoint(x, np.array([0.5, 0.2]), lam=0.1), [0.3, 0.7], [0.2, -0.4])
        np.testing.assert_allclose(mpp_rhs(M, z), symplectic_gradient(M, z), atol=1e-6)

    def test_symplectic_gradient_landmarks(self):
        """Test J∇H on the cometric-primary landmark manifold"""
        M = make_landmark_manifold(LandmarkSpec(n_landmarks=2, sigma=0.5))
        x = np.array([-0.5, 0.0, 0.4, 0.1])
        rng = np.random.default_rng(3)
        u = 0.5 * np.eye(4) + 0.05 * rng.standard_normal((4, 4))
        z = CotangentState(FramePoint(x, u), rng.standard_normal(4), 0.2 * rng.standard_normal((4, 4)))
        assert z.size == 2 * (2 * 2 + 2 * 2 * 4)
        np.testing.assert_allclose(mpp_rhs(M, z), symplectic_gradient(M, z), atol=1e-6)

    def test_frame_coordinates(self):
        """Test uᵀη for a flat scaled frame"""
        M = surface("plane")
        z = CotangentState(FramePoint(np.zeros(2), np.diag([2.0, 1.0])), [1.0, 3.0], np.zeros((2, 2)))
        np.testing.assert_allclose(frame_coordinates(M, z), [2.0, 3.0])


class TestMPPFlow:
    """Test cases for integrated most probable paths"""

    def setup_method(self):
        """Setup test fixtures"""
        self.cfg = IntegratorConfig(steps=400)

    @pytest.mark.parametrize("kind", ["sphere", "ellipsoid", "hyperbolic"])
    def test_hamiltonian_conserved(self, kind):
        """Test relative drift of H below 1e-6 with RK4"""
        M = surface(kind)
        traj = integrate_mpp(M, anisotropic_state(M, np.array([0.2, 0.1])), self.cfg)
        assert hamiltonian_drift(traj) < 1e-6
        assert traj.diagnostics["min_frame_singular_value"] > 0

    def test_hamiltonian_conserved_landmarks(self):
        """Test relative drift of H below 1e-6 for two landmarks with an anisotropic frame"""
        M = make_landmark_manifold(LandmarkSpec(n_landmarks=2, sigma=0.5))
        rng = np.random.default_rng(7)
        x = np.array([-0.5, 0.0, 0.5, 0.0])
        u = np.diag([1.5, 0.5, 1.5, 0.5]) + 0.05 * rng.standard_normal((4, 4))
        z = CotangentState(FramePoint(x, u), [-0.2, 0.3, 0.2, 0.3], 0.1 * rng.standard_normal((4, 4)))
        traj = integrate_mpp(M, z, IntegratorConfig(steps=1000))
        assert hamiltonian_drift(traj) < 1e-6

    def test_landmark_translation_equivariance(self):
        """Test that translating every landmark translates the whole path"""
        M = make_landmark_manifold(LandmarkSpec(n_landmarks=2, sigma=0.5))
        x = np.array([-0.5, 0.0, 0.5, 0.0])
        shift = np.tile([0.7, -0.3], 2)
        u = np.diag([1.5, 0.5, 1.5, 0.5])
        xi_x, xi_u = [-0.3, 0.8, 0.3, 0.8], 0.2 * np.eye(4)
        cfg = IntegratorConfig(steps=100)
        a = integrate_mpp(M, CotangentState(FramePoint(x, u), xi_x, xi_u), cfg)
        b = integrate_mpp(M, CotangentState(FramePoint(x + shift, u), xi_x, xi_u), cfg)
        np.testing.assert_allclose(b.xs - shift, a.xs, atol=1e-10)
        np.testing.assert_allclose(b.us, a.us, atol=1e-10)

    def test_fine_euler_matches_rk4(self):
        """Test Euler at 10⁴ steps against RK4 at 10³ steps on the MPP endpoint"""
        M = surface("sphere")
        z = anisotropic_state(M, np.array([0.2, 0.1]))
        euler = integrate_mpp(M, z, IntegratorConfig(scheme="euler", steps=10000), record=False)
        rk4 = integrate_mpp(M, z, IntegratorConfig(steps=1000), record=False)
        np.testing.assert_allclose(euler.endpoint, rk4.endpoint, atol=1e-3)

    def test_frame_stays_horizontal(self):
        """Test that the frame is parallel transported along the base path"""
        M = surface("ellipsoid")
        traj = integrate_mpp(M, anisotropic_state(M, np.array([0.2, 0.1])), IntegratorConfig(steps=1000))
        assert horizontality_residual(M, traj) < 1e-5

    def test_matches_parallel_transport(self):
        """Test the integrated frame against transport along the base path"""
        M = surface("sphere")
        traj = integrate_mpp(M, anisotropic_state(M, np.array([0.2, 0.1])), self.cfg)
        us = parallel_transport(M, traj.ts, traj.xs, traj.us[0], substeps=2)
        np.testing.assert_allclose(us[-1], traj.us[-1], atol=1e-4)

    def test_orthonormal_frame_gives_geodesic(self):
        """Test that an orthonormal frame with zero vertical momentum follows a geodesic"""
        M = surface("ellipsoid")
        x0 = np.array([0.25, -0.1])
        u0 = orthonormal_frame(M, x0)
        xi = np.array([0.4, 0.9])
        traj = integrate_mpp(M, CotangentState(FramePoint(x0, u0), xi, np.zeros((2, 2))), self.cfg)
        geodesic = riemannian_geodesic(M, x0, u0 @ u0.T @ xi, self.cfg)
        np.testing.assert_allclose(traj.xs, geodesic.xs, atol=1e-6)

    def test_low_rank_path_equivalent_for_full_frames(self):
        """Test that both cometric paths agree when k = d and λ = 0"""
        M = surface("hyperbolic")
        z = anisotropic_state(M, np.array([0.1, 0.2]))
        full = integrate_mpp(M, z, IntegratorConfig(steps=100), low_rank=False)
        low = integrate_mpp(M, z, IntegratorConfig(steps=100), low_rank=True)
        assert low.diagnostics["low_rank"] and not full.diagnostics["low_rank"]
        np.testing.assert_allclose(low.states, full.states, atol=1e-10)
        np.testing.assert_allclose(cometric_blocks(M, z.point, True).assembled(),
                                   cometric_blocks(M, z.point, False).assembled(), atol=1e-12)

    def test_frame_rotation_equivariance(self):
        """Test that rotating frame and vertical momentum leaves the base path unchanged"""
        M = surface("ellipsoid")
        z = anisotropic_state(M, np.array([0.1, 0.3]))
        angle = 0.7
        Q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        rotated = CotangentState(FramePoint(z.point.x, z.point.u @ Q), z.xi_x, z.xi_u @ Q)
        cfg = IntegratorConfig(steps=100)
        a, b = integrate_mpp(M, z, cfg), integrate_mpp(M, rotated, cfg)
        np.testing.assert_allclose(b.xs, a.xs, atol=1e-8)
        np.testing.assert_allclose(b.us, a.us @ Q, atol=1e-8)

    def test_flat_plane_straight_line(self):
        """Test x(t) = u uᵀ ξ t in the plane"""
        M = surface("plane")
        z = CotangentState(FramePoint(np.zeros(2), np.diag([2.0, 1.0])), [0.5, 1.0], np.zeros((2, 2)))
        traj = integrate_mpp(M, z, IntegratorConfig(steps=10))
        np.testing.assert_allclose(traj.endpoint, [2.0, 1.0], atol=1e-12)

    def test_chart_exit(self):
        """Test that leaving the chart raises with the partial trajectory attached"""
        M = ChartManifold(dim=2, name="disc", metric=lambda x: Jet.constant(np.eye(2), 2),
                          chart_domain=lambda x: np.linalg.norm(x) < 1.0)
        z = CotangentState(FramePoint(np.zeros(2), np.eye(2)), [2.0, 0.0], np.zeros((2, 2)))
        with pytest.raises(ChartExitError) as info:
            integrate_mpp(M, z, IntegratorConfig(steps=100))
        partial = info.value.trajectory
        assert info.value.exit_time == pytest.approx(0.5, abs=0.011)
        assert np.all(np.linalg.norm(partial.xs, axis=1) < 1.0)
        assert len(partial.hamiltonian) == len(partial)


class TestDevelopment:
    """Test cases for development and anti-development"""

    def test_plane_development(self):
        """Test x(T) = x0 + u0 s(T) in the plane"""
        M = surface("plane")
        u0 = FramePoint(np.array([1.0, -1.0]), np.diag([2.0, 1.0]))
        traj = develop(M, u0, [0.0, 1.0], [[0.0, 0.0], [1.0, 2.0]], substeps=5)
        assert traj.kind == "frame"
        np.testing.assert_allclose(traj.endpoint, [3.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(traj.us[-1], u0.u, atol=1e-14)

    def test_quarter_great_circle(self):
        """Test that a unit-speed quarter turn from the north pole reaches the equator"""
        M = surface("sphere")
        u0 = FramePoint(np.zeros(2), 0.5 * np.eye(2))
        traj = develop(M, u0, [0.0, np.pi / 2], [[0.0, 0.0], [np.pi / 2, 0.0]], substeps=200)
        np.testing.assert_allclose(traj.endpoint, [1.0, 0.0], atol=1e-8)

    def test_straight_driver_gives_geodesic(self):
        """Test that developing a straight line from an orthonormal frame gives a geodesic"""
        M = surface("ellipsoid")
        x0 = np.array([0.1, -0.3])
        u0 = orthonormal_frame(M, x0)
        v = np.array([0.8, 0.5])
        traj = develop(M, FramePoint(x0, u0), [0.0, 1.0], [[0.0, 0.0], v], substeps=400)
        geodesic = riemannian_geodesic(M, x0, u0 @ v, IntegratorConfig(steps=400))
        np.testing.assert_allclose(traj.endpoint, geodesic.endpoint, atol=1e-8)

    def test_driver_must_start_at_origin(self):
        """Test that a driver not starting at 0 is rejected"""
        with pytest.raises(ValueError):
            develop(surface("plane"), FramePoint(np.zeros(2), np.eye(2)), [0.0, 1.0], [[1.0, 0.0], [2.0, 0.0]])

    def test_plane_antidevelopment(self):
        """Test s = u0⁻¹(x − x0) in the plane"""
        M = surface("plane")
        ts = np.linspace(0.0, 1.0, 5)
        xs = np.stack([ts, ts ** 2], axis=-1)
        s = antidevelop(M, np.diag([2.0, 0.5]), ts, xs)
        np.testing.assert_allclose(s, np.stack([ts / 2.0, 2.0 * ts ** 2], axis=-1), atol=1e-12)

    def test_round_trip(self):
        """Test antidevelop ∘ develop = identity at the driver knots"""
        M = surface("ellipsoid")
        u0 = FramePoint(np.array([0.2, 0.1]), np.array([[0.9, 0.3], [0.0, 0.7]]))
        ts = np.linspace(0.0, 1.0, 5)
        s = np.array([[0.0, 0.0], [0.3, 0.1], [0.4, 0.5], [0.2, 0.8], [-0.1, 0.6]])
        substeps = 200
        traj = develop(M, u0, ts, s, substeps=substeps)
        recovered = antidevelop(M, u0, traj.ts, traj.xs)
        np.testing.assert_allclose(recovered[::substeps], s, atol=1e-5)

    def test_antidevelop_start_mismatch(self):
        """Test that the path must start at the frame's base point"""
        M = surface("plane")
        with pytest.raises(ValueError):
            antidevelop(M, FramePoint(np.zeros(2), np.eye(2)), [0.0, 1.0], [[1.0, 0.0], [2.0, 0.0]])


class TestEnergyAndDiagnostics:
    """Test cases for energies, horizontality and covariant acceleration"""

    def test_frame_path_energy(self):
        """Test ∫ ẋᵀ(uuᵀ)⁻¹ẋ on flat developments"""
        M = surface("plane")
        identity = develop(M, FramePoint(np.zeros(2), np.eye(2)), [0.0, 1.0], [[0.0, 0.0], [1.0, 0.0]], substeps=10)
        scaled = develop(M, FramePoint(np.zeros(2), np.diag([2.0, 1.0])), [0.0, 1.0], [[0.0, 0.0], [0.5, 0.0]],
                         substeps=10)
        assert sub_riemannian_energy(M, identity) == pytest.approx(1.0)
        assert sub_riemannian_energy(M, scaled) == pytest.approx(0.25)

    def test_mpp_energy(self):
        """Test that an MPP has energy 2H·T"""
        M = surface("plane")
        z = CotangentState(FramePoint(np.zeros(2), np.eye(2)), [1.0, 0.0], np.zeros((2, 2)))
        traj = integrate_mpp(M, z, IntegratorConfig(steps=20, t_end=2.0))
        assert sub_riemannian_energy(M, traj) == pytest.approx(2.0, rel=1e-10)

    def test_energy_rejects_non_horizontal_path(self):
        """Test that a frame frozen in chart coordinates on the sphere is not horizontal"""
        M = surface("sphere")
        ts = np.linspace(0.0, 1.0, 51)
        xs = np.stack([0.2 + 0.4 * ts, np.zeros_like(ts)], axis=-1)
        us = np.tile(np.eye(2).ravel(order="F"), (len(ts), 1))
        traj = Trajectory(ts=ts, states=np.hstack([xs, us]), kind="frame", d=2, k=2)
        assert horizontality_residual(M, traj) > 1e-2
        with pytest.raises(NonHorizontalPathError):
            sub_riemannian_energy(M, traj)

    def test_development_is_horizontal(self):
        """Test a tiny residual for a developed path"""
        M = surface("sphere")
        traj = develop(M, FramePoint(np.array([0.1, 0.2]), 0.4 * np.eye(2)), [0.0, 1.0],
                       [[0.0, 0.0], [0.6, -0.3]], substeps=1000)
        assert horizontality_residual(M, traj) < 1e-6

    def test_covariant_acceleration_flat(self):
        """Test zero acceleration in the plane by both routes"""
        M = surface("plane")
        z = CotangentState(FramePoint(np.zeros(2), np.diag([1.5, 0.5])), [0.3, 0.4], [[0.1, 0.2], [0.3, 0.4]])
        acc = covariant_acceleration(M, integrate_mpp(M, z, IntegratorConfig(steps=50)))
        np.testing.assert_allclose(acc.from_momentum, 0.0, atol=1e-10)
        np.testing.assert_allclose(acc.from_curvature, 0.0, atol=1e-14)

    def test_covariant_acceleration_geodesic(self):
        """Test that an orthonormal-frame MPP has no covariant acceleration"""
        M = surface("sphere")
        x0 = np.array([0.2, 0.1])
        z = CotangentState(FramePoint(x0, orthonormal_frame(M, x0)), [0.4, 0.2], np.zeros((2, 2)))
        acc = covariant_acceleration(M, integrate_mpp(M, z, IntegratorConfig(steps=400)))
        assert np.max(np.abs(acc.from_momentum)) < 1e-4
        assert acc.discrepancy() < 1e-4

    @pytest.mark.parametrize("kind", ["sphere", "ellipsoid"])
    def test_covariant_acceleration_routes_agree(self, kind):
        """Test the momentum route against the curvature contraction on an anisotropic MPP"""
        M = surface(kind)
        acc = covariant_acceleration(M, integrate_mpp(M, anisotropic_state(M, np.array([0.2, 0.1])),
                                                      IntegratorConfig(steps=1000)))
        assert np.max(np.abs(acc.from_curvature)) > 1e-3
        assert acc.discrepancy() < 1e-4

    def test_covariant_acceleration_needs_full_frame(self):
        """Test that low-rank trajectories are rejected"""
        M = surface("sphere")
        z = CotangentState(FramePoint(np.array([0.1, 0.2]), np.array([0.5, 0.2]), lam=0.1), [0.3, 0.7], [0.2, -0.4])
        with pytest.raises(ValueError):
            covariant_acceleration(M, integrate_mpp(M, z, IntegratorConfig(steps=10)))
