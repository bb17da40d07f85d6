use std::path::Path;

use super::{io_err, HarnessError};
use crate::netcore::{load_network, save_network, solve_power_flow, Network, NetworkError, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Share of the total load served by DERs in the DER variant.
pub const DER_SHARE: f64 = 0.2;

/// Every machine keeps half its inertia.
pub fn half_inertia(net: &Network) -> Network {
    let mut out = net.clone();
    for g in &mut out.generators {
        g.m *= 0.5;
    }
    out
}

/// DERs serve `share` of every load bus's active demand as a negative
/// constant-power load, so the net load drops by `share` while the
/// voltage-dependent parts stay as they were. Synchronous units back down
/// in proportion to their solved output: dispatch, limits and droop gain
/// scale together, the unit count is unchanged and inertia is halved.
pub fn der_variant(net: &Network, share: f64) -> Result<Network, HarnessError> {
    if !(0.0..1.0).contains(&share) {
        return Err(HarnessError::Config(format!("DER share {share} outside [0, 1)")));
    }
    let sol = solve_power_flow(net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mut out = half_inertia(net);
    let keep = 1.0 - share;
    for b in &mut out.buses {
        if b.p_demand_0 > 0.0 {
            b.p_demand_0 *= keep;
            b.zip_a /= keep;
            b.zip_b /= keep;
        }
    }
    let gen_total: f64 = sol.gen_p.iter().sum();
    let scale = 1.0 - share * net.total_demand() / gen_total;
    if !(scale > 0.0) {
        return Err(HarnessError::Config(format!("DERs would displace all synchronous output (scale {scale:.3})")));
    }
    for (g, &p) in out.generators.iter_mut().zip(&sol.gen_p) {
        g.p_dispatch = p * scale;
        g.governor.p_m_ref = g.p_dispatch;
        g.governor.p_m_min *= scale;
        g.governor.p_m_max *= scale;
        g.governor.r /= scale;
    }
    out.validate().map_err(|e| match e {
        NetworkError::Invariant { record, reason } => {
            HarnessError::Config(format!("DER variant breaks {record}: {reason}"))
        }
        other => other.into(),
    })?;
    Ok(out)
}

/// Writes `base.json` (a byte copy of the input), `half_inertia.json` and
/// `der.json` into `out_dir` and returns the three networks in that order.
pub fn cmd_scenario_variants(input: &Path, out_dir: &Path) -> Result<[Network; 3], HarnessError> {
    let base = load_network(input)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let copy = out_dir.join("base.json");
    std::fs::copy(input, &copy).map_err(io_err(&copy))?;
    let half = half_inertia(&base);
    save_network(&half, out_dir.join("half_inertia.json"))?;
    let der = der_variant(&base, DER_SHARE)?;
    save_network(&der, out_dir.join("der.json"))?;
    Ok([base, half, der])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{derive_zip_params, network_from_json};

    fn wscc9() -> Network {
        network_from_json(include_str!("../../data/wscc9.json")).unwrap()
    }

    #[test]
    fn half_inertia_halves_the_total_exactly() {
        let net = wscc9();
        assert_eq!(half_inertia(&net).total_inertia(), 0.5 * net.total_inertia());
    }

    #[test]
    fn der_variant_reduces_net_load_and_keeps_the_loads_physical() {
        let net = wscc9();
        let der = der_variant(&net, DER_SHARE).unwrap();
        assert!((der.total_demand() - 0.8 * net.total_demand()).abs() < 1e-12);
        assert_eq!(der.n_gen(), net.n_gen());
        assert!((der.total_inertia() - 0.5 * net.total_inertia()).abs() < 1e-12);

        let s0 = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let s1 = solve_power_flow(&der, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let z0 = derive_zip_params(&net, &s0).unwrap();
        let z1 = derive_zip_params(&der, &s1).unwrap();
        for (k, b) in net.buses.iter().enumerate() {
            if b.p_demand_0 > 0.0 {
                // The voltage-dependent components are untouched up to the V0 shift.
                let a0 = z0[k].i_const_p * s0.v[k];
                let a1 = z1[k].i_const_p * s1.v[k];
                assert!((a0 - a1).abs() < 1e-9, "bus {}", b.id);
                assert!(z1[k].p_const < z0[k].p_const);
            }
        }
        for (g, p) in der.generators.iter().zip(&s1.gen_p) {
            assert!(*p <= g.governor.p_m_max + 1e-9);
        }
    }

    #[test]
    fn der_share_must_be_a_fraction() {
        assert!(der_variant(&wscc9(), 1.0).is_err());
        assert!(der_variant(&wscc9(), -0.1).is_err());
    }

    #[test]
    fn base_variant_is_a_byte_copy() {
        let dir = tempfile::tempdir().unwrap();
        let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/wscc9.json");
        let [base, half, der] = cmd_scenario_variants(&input, dir.path()).unwrap();
        assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(dir.path().join("base.json")).unwrap());
        assert_eq!(load_network(dir.path().join("half_inertia.json")).unwrap(), half);
        assert_eq!(load_network(dir.path().join("der.json")).unwrap(), der);
        assert_eq!(base, wscc9());
    }
}
