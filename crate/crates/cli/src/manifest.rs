//! Check ids and the relation each one verifies.

pub const MANIFEST: &[(&str, &str)] = &[
    ("count.step_bound", "c_n <= |Omega| (|Omega| - 1)^(n-1)"),
    ("count.submultiplicative", "c_{n+m} <= c_n c_m"),
    ("bridge.supermultiplicative", "b_{n+m} >= b_n b_m"),
    ("bridge.ordering", "b_n <= h_n <= c_n"),
    ("bridge.mu_bracket", "b_n^(1/n) <= mu <= c_n^(1/n)"),
    ("polygon.bridge_square", "sum_x b_n(x)^2 <= 2d (n+1)^2 c_{2n+1}(e_1)"),
    ("polygon.corollary", "b_n^2 <= n (2n+1)^(d-1) 2d (n+1)^2 c_{2n+1}(e_1)"),
    ("hw.walk_split", "c_n <= sum_{m=0}^{n} h_{n-m} h_{m+1}"),
    ("hw.span", "h_n <= sum_A P_D(A) b_{n,A}"),
    ("hw.partition", "h_n <= P_D(n) b_n"),
    ("hw.assembled", "c_n <= b_{n+1} sum_{m=0}^{n} P_D(n-m) P_D(m+1)"),
    ("hw.kesten", "d^2 <= c_{n+2}/c_n <= (2d-1)^2"),
    ("lace.nonnegative", "pi_m^(N)(x) >= 0"),
    ("lace.pi1_zero", "pi_1(x) = 0"),
    (
        "lace.low_order",
        "[z^2] Pi^(1) = 2d, [z^4] Pi^(1) = 2d(2d-2), [z^3] Pi^(2) = 2d, [z^5] Pi^(2) = 3(2d)(2d-2)",
    ),
    ("lace.recursion", "c_n(x) = sum_y D(y) c_{n-1}(x-y) + sum_{m=2}^{n} sum_y pi_m(y) c_{n-m}(x-y)"),
    ("lace.kj", "K[a,b] = sum_Gamma prod_{st in Gamma} U_st; J[a,b] over graphs = J[a,b] over laces"),
    ("series.ode", "d[z chi]/dz = (1 - Pi_hat_z + z Pi_hat_z') chi(z)^2"),
    ("series.chi_lower_bound", "b_n^k <= c_k^n for 0 <= k <= n"),
    (
        "series.fourier_reciprocal",
        "(1 - z |Omega| D_hat(k) - Pi_hat_z(k)) G_hat_z(k) = 1",
    ),
    ("series.fourier_closed_form", "G_hat_z(k) = (1 - z^2)/(1 + z^2 - 2z cos k) on Z"),
    ("series.simon_lieb", "G(x,y) - G_D(x,y) <= sum_{w in dD} G_{D-bar}(x,w) G(w,y)"),
    (
        "series.diagrammatic",
        "Pi^(1)_z <= z |Omega| sup H_z and Pi^(2)_z <= sup H_z sup (G_z * H_z)",
    ),
    ("hex.zc_bracket", "z_c = 1/sqrt(2 + sqrt(2))"),
    ("hex.vertex_identity", "sum_{p ~ v} (p - v) F(p) = 0 at z = z_c, sigma = 5/8"),
    ("hex.strip_identity", "1 = cos(3pi/8) A_{T,L} + B_{T,L} + cos(pi/4) E_{T,L} at z = z_c"),
    ("hex.strip_windings", "winding to alpha = +-pi, beta = 0, epsilon = 2pi/3, epsilon-bar = -2pi/3"),
    ("hex.recursion", "A_{T+1} - A_T <= z_c B_{T+1}^2"),
    ("grassmann.norm", "int e^{-S_A} = 1"),
    ("grassmann.wick", "int e^{-S_A} prod_l phibar_{x_l} phi_{y_l} = perm [C_{x_i y_j}]"),
    ("grassmann.ibp", "int e^{-S_A} phibar_a F = sum_x C_{ax} int e^{-S_A} dF/dphi_x"),
    (
        "grassmann.repsaw",
        "sum_{omega in S_ab} C^omega = int e^{-S_A} phibar_a phi_b prod_{x != a,b} (1 + tau_x)",
    ),
    (
        "grassmann.loops",
        "int phibar_a phi_b prod_{x in X} (1 + phi_x phibar_x) dmu_C = sum_omega C^omega sum_{Z in X - omega} sum_{sigma in S(Z)} prod_z C_{z sigma(z)}",
    ),
    ("grassmann.tau", "int e^{-S_A} F(tau) = F(0)"),
    ("srw.value", "int_{[-pi,pi]^d} (1 - D_hat(k))^(-m) dk/(2pi)^d, finite iff d > 2m"),
    ("srw.cross_check", "Bessel representation of G(0) = torus quadrature of G(0)"),
];

pub fn reference(check_id: &str) -> Option<&'static str> {
    MANIFEST.iter().find(|(id, _)| *id == check_id).map(|(_, r)| *r)
}
