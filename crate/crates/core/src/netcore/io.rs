use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Branch, Bus, BusKind, GeneratorParams, GovernorParams, Network, NetworkError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    base_mva: f64,
    nominal_hz: f64,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
    generators: Vec<GenDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    id: u32,
    kind: BusKind,
    p_load: f64,
    q_load: f64,
    zip_a: f64,
    zip_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_set: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    from: u32,
    to: u32,
    r: f64,
    x: f64,
    b_shunt: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDoc {
    bus: u32,
    m: f64,
    d: f64,
    xdp: f64,
    p_dispatch: f64,
    q_dispatch: f64,
    governor: GovDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GovDoc {
    r: f64,
    t: f64,
    pmin: f64,
    pmax: f64,
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    network_from_json(&text)
}

pub fn network_from_json(text: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            kind: b.kind,
            v_nominal: b.v_set.unwrap_or(1.0),
            theta_init: 0.0,
            p_demand_0: b.p_load,
            q_demand_0: b.q_load,
            zip_a: b.zip_a,
            zip_b: b.zip_b,
        })
        .collect();
    let branches = doc
        .branches
        .into_iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            r: b.r,
            x: b.x,
            b_shunt: b.b_shunt,
        })
        .collect();
    let generators = doc
        .generators
        .into_iter()
        .map(|g| GeneratorParams {
            bus: g.bus,
            m: g.m,
            d: g.d,
            x_d_prime: g.xdp,
            p_dispatch: g.p_dispatch,
            q_dispatch: g.q_dispatch,
            governor: GovernorParams {
                r: g.governor.r,
                t: g.governor.t,
                p_m_ref: g.p_dispatch,
                p_m_min: g.governor.pmin,
                p_m_max: g.governor.pmax,
            },
        })
        .collect();
    Network::new(doc.base_mva, doc.nominal_hz, buses, branches, generators)
}

pub fn network_to_json(net: &Network) -> String {
    let doc = NetworkDoc {
        base_mva: net.base_mva,
        nominal_hz: net.nominal_hz,
        buses: net
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id,
                kind: b.kind,
                p_load: b.p_demand_0,
                q_load: b.q_demand_0,
                zip_a: b.zip_a,
                zip_b: b.zip_b,
                v_set: (b.kind != BusKind::Pq || b.v_nominal != 1.0).then_some(b.v_nominal),
            })
            .collect(),
        branches: net
            .branches
            .iter()
            .map(|b| BranchDoc {
                from: b.from,
                to: b.to,
                r: b.r,
                x: b.x,
                b_shunt: b.b_shunt,
            })
            .collect(),
        generators: net
            .generators
            .iter()
            .map(|g| GenDoc {
                bus: g.bus,
                m: g.m,
                d: g.d,
                xdp: g.x_d_prime,
                p_dispatch: g.p_dispatch,
                q_dispatch: g.q_dispatch,
                governor: GovDoc {
                    r: g.governor.r,
                    t: g.governor.t,
                    pmin: g.governor.p_m_min,
                    pmax: g.governor.p_m_max,
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network serializes")
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    let path = path.as_ref();
    std::fs::write(path, network_to_json(net) + "\n").map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "base_mva": 100, "nominal_hz": 60,
        "buses": [
            {"id": 2, "kind": "pq", "p_load": 0.5, "q_load": 0.1, "zip_a": 0.2, "zip_b": 0.1},
            {"id": 1, "kind": "slack", "p_load": 0, "q_load": 0, "zip_a": 0, "zip_b": 0, "v_set": 1.02}
        ],
        "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1, "b_shunt": 0.02}],
        "generators": [{"bus": 1, "m": 8, "d": 1, "xdp": 0.2, "p_dispatch": 0.5, "q_dispatch": 0.1,
                        "governor": {"r": 0.05, "t": 0.2, "pmin": 0, "pmax": 0.8}}]
    }"#;

    #[test]
    fn parses_and_sorts_buses() {
        let net = network_from_json(TWO_BUS).unwrap();
        assert_eq!(net.buses[0].id, 1);
        assert_eq!(net.buses[0].v_nominal, 1.02);
        assert_eq!(net.buses[1].v_nominal, 1.0);
        assert_eq!(net.generators[0].governor.p_m_ref, 0.5);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = TWO_BUS.replace("\"nominal_hz\": 60", "\"nominal_hz\": 60, \"extra\": 1");
        assert!(matches!(network_from_json(&text), Err(NetworkError::Parse(_))));
    }

    #[test]
    fn json_round_trip_preserves_network() {
        let net = network_from_json(TWO_BUS).unwrap();
        let again = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(net, again);
    }
}
