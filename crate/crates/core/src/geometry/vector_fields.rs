use crate::error::{Error, Result};
use crate::jet::Jet;

use super::chart::{Chart, ChartKind};
use super::fields::{Bump, FieldKind, VectorFieldSpec};
use super::params::Params;

fn zero_like(x: &[Jet]) -> Vec<Jet> {
    x.iter().map(|c| c.lift(0.0)).collect()
}

fn unknown(key: &str, chart: &Chart, known: &[&str]) -> Error {
    Error::UnknownName { kind: "vector field", name: format!("{key} on {:?} charts (expected one of {known:?})", chart.kind) }
}

/// Library vector field `key` for the coordinate system of `chart`.
///
/// Cartesian flat charts: `translation {axis}`, `rotation {i, j}`, `euler`,
/// `special_conformal {b}`, `generic`, `compact_generic {center, width}`.
/// Polar flat charts: `rotation`, `euler`, `inverse_radial`.
/// Polar spheres: `rotation`, `boost`. Mercator sphere: `boost`, `rotation`.
/// Stereographic spheres: `euler`, `rotation {i, j}`.
pub fn build_vector_field(chart: &Chart, key: &str, params: &Params) -> Result<VectorFieldSpec> {
    let n = chart.dim;
    match chart.kind {
        ChartKind::FlatCartesian => {
            const KNOWN: &[&str] = &["translation", "rotation", "euler", "special_conformal", "generic", "compact_generic"];
            match key {
                "translation" => {
                    params.check_keys(key, &["axis"])?;
                    let axis = params.integer("axis", 0, 0, n - 1)?;
                    Ok(VectorFieldSpec::new(format!("translation ∂{axis}"), FieldKind::Killing, move |x: &[Jet]| {
                        let mut v = zero_like(x);
                        v[axis] = x[0].lift(1.0);
                        v
                    }))
                }
                "rotation" => rotation_cartesian(n, params),
                "euler" => {
                    params.check_keys(key, &[])?;
                    Ok(euler_cartesian())
                }
                "special_conformal" => {
                    params.check_keys(key, &["b"])?;
                    let mut b = params.list("b")?.unwrap_or_else(|| vec![1.0]);
                    b.resize(n, 0.0);
                    Ok(special_conformal(b))
                }
                "generic" => {
                    params.check_keys(key, &[])?;
                    Ok(generic_cartesian())
                }
                "compact_generic" => {
                    params.check_keys(key, &["center", "width"])?;
                    let mut center = params.list("center")?.unwrap_or_else(|| vec![0.5]);
                    center.resize(n, center[0]);
                    let width = params.number_or("width", 0.3)?;
                    Ok(generic_cartesian().localized(&Bump::around(&center, width)))
                }
                _ => Err(unknown(key, chart, KNOWN)),
            }
        }
        ChartKind::FlatPolar => {
            params.check_keys(key, &[])?;
            match key {
                "rotation" => Ok(rotation_angle(n)),
                "euler" => {
                    Ok(VectorFieldSpec::new("euler r∂r", FieldKind::Conformal, |x: &[Jet]| vec![x[0].clone(), x[0].lift(0.0)]))
                }
                "inverse_radial" => {
                    Ok(VectorFieldSpec::new("(1/r)∂r", FieldKind::Generic, |x: &[Jet]| vec![x[0].recip(), x[0].lift(0.0)]))
                }
                _ => Err(unknown(key, chart, &["rotation", "euler", "inverse_radial"])),
            }
        }
        ChartKind::SpherePolar => {
            params.check_keys(key, &[])?;
            match key {
                "rotation" => Ok(rotation_angle(n)),
                "boost" => Ok(polar_boost()),
                _ => Err(unknown(key, chart, &["rotation", "boost"])),
            }
        }
        ChartKind::Mercator => {
            params.check_keys(key, &[])?;
            match key {
                "boost" => Ok(mercator_boost()),
                "rotation" => Ok(rotation_angle(2)),
                _ => Err(unknown(key, chart, &["boost", "rotation"])),
            }
        }
        ChartKind::SphereStereographic => match key {
            "euler" => {
                params.check_keys(key, &[])?;
                let mut e = euler_cartesian();
                e.claimed_kind = FieldKind::Conformal;
                Ok(e)
            }
            "rotation" => rotation_cartesian(n, params),
            _ => Err(unknown(key, chart, &["euler", "rotation"])),
        },
        _ => Err(unknown(key, chart, &[])),
    }
}

/// `x_i ∂_j − x_j ∂_i`.
fn rotation_cartesian(n: usize, params: &Params) -> Result<VectorFieldSpec> {
    params.check_keys("rotation", &["i", "j"])?;
    let i = params.integer("i", 0, 0, n - 1)?;
    let j = params.integer("j", 1, 0, n - 1)?;
    if i == j {
        return Err(Error::InvalidParams("rotation needs distinct axes i, j".into()));
    }
    Ok(VectorFieldSpec::new(format!("rotation({i},{j})"), FieldKind::Killing, move |x: &[Jet]| {
        let mut v = zero_like(x);
        v[j] = x[i].clone();
        v[i] = -&x[j];
        v
    }))
}

pub fn euler_cartesian() -> VectorFieldSpec {
    VectorFieldSpec::new("euler x·∂", FieldKind::Conformal, |x: &[Jet]| x.to_vec())
}

/// `2(b·x)x − |x|²b`.
pub fn special_conformal(b: Vec<f64>) -> VectorFieldSpec {
    VectorFieldSpec::new(format!("special_conformal{b:?}"), FieldKind::Conformal, move |x: &[Jet]| {
        let mut bx = x[0].lift(0.0);
        let mut r2 = x[0].lift(0.0);
        for (xi, bi) in x.iter().zip(&b) {
            bx += &xi.scale(*bi);
            r2 += &(xi * xi);
        }
        x.iter().zip(&b).map(|(xi, bi)| (&bx * xi).scale(2.0) - r2.scale(*bi)).collect()
    })
}

/// `x_0² ∂_0`, which is not conformal.
pub fn generic_cartesian() -> VectorFieldSpec {
    VectorFieldSpec::new("generic (x0², 0)", FieldKind::Generic, |x: &[Jet]| {
        let mut v = zero_like(x);
        v[0] = &x[0] * &x[0];
        v
    })
}

/// `∂_φ` on the last coordinate.
pub fn rotation_angle(n: usize) -> VectorFieldSpec {
    VectorFieldSpec::new("rotation ∂φ", FieldKind::Killing, move |x: &[Jet]| {
        let mut v = zero_like(x);
        v[n - 1] = x[0].lift(1.0);
        v
    })
}

/// `−sin θ₁ ∂_{θ₁}`, the gradient of the first spherical harmonic `cos θ₁`.
pub fn polar_boost() -> VectorFieldSpec {
    VectorFieldSpec::new("boost −sinθ1 ∂θ1", FieldKind::Conformal, |x: &[Jet]| {
        let mut v = zero_like(x);
        v[0] = -x[0].sin();
        v
    })
}

/// `−∂_t` in Mercator coordinates: the same boost as [`polar_boost`].
pub fn mercator_boost() -> VectorFieldSpec {
    VectorFieldSpec::new("boost −∂t", FieldKind::Conformal, |x: &[Jet]| vec![x[0].lift(-1.0), x[0].lift(0.0)])
}
