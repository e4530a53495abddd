//! JSON profile files.
//!
//! Schema: `{name, dim, interval: [ta, tb], a: {kind, ...}, b: {...},
//! s_g: {...}, endpoints: [{type: "boundary"|"focal", param, orientation?,
//! mean_curvature?, focal_dim?, vanishing_order?}], weight_norm: {t_ref,
//! area}, weight?: {...}}`. A missing vanishing order at a focal endpoint
//! is estimated by a log-log fit of the reconstructed weight.

use serde::{Deserialize, Serialize};

use crate::curve::ScalarCurve;
use crate::error::{CoreError, Result};

use super::{
    BoundaryComponent, Endpoint, FocalEndpoint, IsoparametricProfile, Side, WeightNorm,
};

#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    name: String,
    dim: usize,
    interval: [f64; 2],
    a: ScalarCurve,
    b: ScalarCurve,
    s_g: ScalarCurve,
    endpoints: Vec<EndpointFile>,
    weight_norm: WeightNormFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<ScalarCurve>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightNormFile {
    t_ref: f64,
    area: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum EndpointFile {
    Boundary {
        param: f64,
        orientation: f64,
        mean_curvature: f64,
    },
    Focal {
        param: f64,
        focal_dim: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        vanishing_order: Option<f64>,
    },
}

impl EndpointFile {
    fn param(&self) -> f64 {
        match self {
            EndpointFile::Boundary { param, .. } => *param,
            EndpointFile::Focal { param, .. } => *param,
        }
    }
}

/// Parses a profile from its JSON document.
pub fn profile_from_json(json: &str) -> Result<IsoparametricProfile> {
    let file: ProfileFile =
        serde_json::from_str(json).map_err(|e| CoreError::ProfileFile(e.to_string()))?;
    if file.endpoints.len() != 2 {
        return Err(CoreError::ProfileFile(format!(
            "expected exactly 2 endpoints, got {}",
            file.endpoints.len()
        )));
    }
    let mut eps = file.endpoints;
    eps.sort_by(|l, r| l.param().partial_cmp(&r.param()).unwrap());
    let mut eps = eps.into_iter();
    let (lf, rf) = (eps.next().unwrap(), eps.next().unwrap());

    let build = |ef: EndpointFile| -> Endpoint {
        match ef {
            EndpointFile::Boundary {
                param,
                orientation,
                mean_curvature,
            } => Endpoint::Boundary(BoundaryComponent {
                param,
                orientation,
                mean_curvature,
            }),
            EndpointFile::Focal {
                param,
                focal_dim,
                vanishing_order,
            } => Endpoint::Focal(FocalEndpoint {
                param,
                focal_dim,
                // Placeholder when absent; estimated below once the profile
                // data is assembled.
                vanishing_order: vanishing_order.unwrap_or(f64::NAN),
            }),
        }
    };

    let mut profile = IsoparametricProfile {
        name: file.name,
        dim: file.dim,
        interval: (file.interval[0], file.interval[1]),
        a: file.a,
        b: file.b,
        s: file.s_g,
        left: build(lf),
        right: build(rf),
        weight_norm: WeightNorm {
            t_ref: file.weight_norm.t_ref,
            area: file.weight_norm.area,
        },
        weight: file.weight,
    };

    for side in [Side::Left, Side::Right] {
        let missing = profile
            .endpoint(side)
            .as_focal()
            .map(|f| f.vanishing_order.is_nan())
            .unwrap_or(false);
        if missing {
            let nu = profile
                .derived_vanishing_order(side)
                .map(Ok)
                .unwrap_or_else(|| profile.estimate_vanishing_order(side))?;
            let slot = match side {
                Side::Left => &mut profile.left,
                Side::Right => &mut profile.right,
            };
            if let Endpoint::Focal(f) = slot {
                f.vanishing_order = nu;
            }
        }
    }
    Ok(profile)
}

/// Serializes a profile to the JSON file schema.
pub fn profile_to_json(p: &IsoparametricProfile) -> String {
    let pack = |e: &Endpoint| match e {
        Endpoint::Boundary(b) => EndpointFile::Boundary {
            param: b.param,
            orientation: b.orientation,
            mean_curvature: b.mean_curvature,
        },
        Endpoint::Focal(f) => EndpointFile::Focal {
            param: f.param,
            focal_dim: f.focal_dim,
            vanishing_order: Some(f.vanishing_order),
        },
    };
    let file = ProfileFile {
        name: p.name.clone(),
        dim: p.dim,
        interval: [p.interval.0, p.interval.1],
        a: p.a.clone(),
        b: p.b.clone(),
        s_g: p.s.clone(),
        endpoints: vec![pack(&p.left), pack(&p.right)],
        weight_norm: WeightNormFile {
            t_ref: p.weight_norm.t_ref,
            area: p.weight_norm.area,
        },
        weight: p.weight.clone(),
    };
    serde_json::to_string_pretty(&file).expect("profile serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_hemisphere;

    #[test]
    fn roundtrip_preserves_evaluations() {
        let p = make_hemisphere(3).unwrap();
        let json = profile_to_json(&p);
        let q = profile_from_json(&json).unwrap();
        assert!(q.validate().is_usable());
        for k in 0..20 {
            let t = 0.99 * k as f64 / 19.0;
            assert!((p.a.eval(t) - q.a.eval(t)).abs() < 1e-14);
            assert!((p.b.eval(t) - q.b.eval(t)).abs() < 1e-14);
        }
        assert_eq!(p.dim, q.dim);
    }

    #[test]
    fn missing_vanishing_order_is_estimated() {
        let p = make_hemisphere(3).unwrap();
        let mut json: serde_json::Value = serde_json::from_str(&profile_to_json(&p)).unwrap();
        json["endpoints"][1]
            .as_object_mut()
            .unwrap()
            .remove("vanishing_order");
        let q = profile_from_json(&json.to_string()).unwrap();
        let nu = q.right.as_focal().unwrap().vanishing_order;
        assert!((nu - 0.5).abs() < 1e-4, "estimated order {nu}");
    }

    #[test]
    fn malformed_table_is_a_hard_error() {
        let text = r#"{
            "name": "bad", "dim": 3, "interval": [0.0, 1.0],
            "a": {"kind": "table", "ts": [0.0, 0.5, 0.2, 0.6, 0.7, 0.8, 0.9, 1.0],
                   "values": [0,0,0,0,0,0,0,0]},
            "b": {"kind": "poly", "coeffs": [1.0, 0.0, -1.0]},
            "s_g": {"kind": "constant", "value": 6.0},
            "endpoints": [
                {"type": "boundary", "param": 0.0, "orientation": -1.0, "mean_curvature": 0.0},
                {"type": "focal", "param": 1.0, "focal_dim": 0, "vanishing_order": 0.5}],
            "weight_norm": {"t_ref": 0.5, "area": 9.42}
        }"#;
        let err = profile_from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("strictly increasing"), "got: {msg}");
    }
}
