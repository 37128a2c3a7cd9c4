//! Super-Virasoro relations and Dirac identities at desk scale.

use loop_index::lie::Q;
use loop_index::sugawara::{
    adjoint_residuals, assemble_hat_space, check_super_virasoro, dirac, l0_consistency, q_f64, sugawara_modes,
};

const DESK: [(u32, u32); 3] = [(1, 0), (1, 1), (2, 0)];

#[test]
fn desk_configurations() {
    for (level, mu) in DESK {
        let hs = assemble_hat_space(mu, level, 4, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 4).unwrap();
        let sv = check_super_virasoro(&hs, &modes, 2);
        assert!(sv.max_residual() < 1e-9, "level {level} mu {mu}: {} {} {}", sv.max_ll, sv.max_lg, sv.max_gg);
        assert!(sv.central_fit_error < 1e-9);
        assert!(l0_consistency(&hs, &modes) < 1e-9);
        let (g, l) = adjoint_residuals(&modes);
        assert!(g < 1e-9 && l < 1e-9);

        let rep = dirac(&hs, &modes);
        rep.verify(1e-9).unwrap();
        let gap = q_f64(hs.gap_bound());
        assert!(rep.min_d2 >= gap - 1e-9);
        // The lowest block attains h + d/8 - c/24.
        let lowest = hs.conformal_weight + Q::new(3, 8) - hs.central_charge() / Q::from_integer(24);
        assert!((rep.blocks[0].min_d2 - q_f64(lowest)).abs() < 1e-12);
    }
}
