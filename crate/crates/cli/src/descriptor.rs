//! Surface descriptors: the `--surface` grammar and the key/value file format.
//!
//! Inline forms:
//!
//! ```text
//! clifford
//! homogeneous:<radius>
//! cyclide:<name>                 named fixture: default, elliptic
//! cyclide:<major>,<minor>,<offset>
//! perturbed:<base>:<bump-file>   base is any of the above
//! ```
//!
//! Anything else is read as a path to a descriptor file:
//!
//! ```text
//! kind = cyclide
//! major = 1.6
//! minor = 0.8
//! offset = 0.3
//! bump = 1, 0, 0.001, 0.0        # m, k, amplitude, phase; repeatable
//! ```
//!
//! Values are plain decimal floats; bit-exact round trips are not promised.

use crate::report::{usage, Failure};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use toruslab_core::catalog;
use toruslab_core::torus::{Bump, BumpTerm, Surface};
use toruslab_core::vec4;
use toruslab_core::SpherePoint;

/// A parsed surface plus the resolved parameters echoed into reports.
pub struct SurfaceSpec {
    pub surface: Surface,
    pub resolved: ResolvedSurface,
}

/// Serializable summary of what the descriptor resolved to.
#[derive(Serialize, Clone)]
pub struct ResolvedSurface {
    pub kind: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bump: Vec<[f64; 4]>,
}

pub fn parse_surface(text: &str) -> Result<SurfaceSpec, Failure> {
    let text = text.trim();
    if let Some(spec) = parse_inline(text)? {
        return Ok(spec);
    }
    if Path::new(text).is_file() {
        return parse_file(Path::new(text));
    }
    Err(usage(format!(
        "unknown surface '{text}': expected clifford, homogeneous:<r>, \
         cyclide:<name|major,minor,offset>, perturbed:<base>:<bump-file>, \
         or a descriptor file path"
    )))
}

fn parse_inline(text: &str) -> Result<Option<SurfaceSpec>, Failure> {
    if text == "clifford" {
        return Ok(Some(SurfaceSpec {
            surface: Surface::clifford(),
            resolved: ResolvedSurface {
                kind: "clifford".into(),
                parameters: BTreeMap::new(),
                bump: Vec::new(),
            },
        }));
    }
    if let Some(rest) = text.strip_prefix("homogeneous:") {
        let radius = parse_float(rest, "tube radius")?;
        let surface = Surface::homogeneous(radius).map_err(|e| usage(e.to_string()))?;
        return Ok(Some(SurfaceSpec {
            surface,
            resolved: ResolvedSurface {
                kind: "homogeneous".into(),
                parameters: BTreeMap::from([("radius", radius)]),
                bump: Vec::new(),
            },
        }));
    }
    if let Some(rest) = text.strip_prefix("cyclide:") {
        return parse_cyclide(rest).map(Some);
    }
    if let Some(rest) = text.strip_prefix("perturbed:") {
        let (base_text, file) = rest.rsplit_once(':').ok_or_else(|| {
            usage(format!("perturbed surface needs a base and a bump file, got '{text}'"))
        })?;
        let base = parse_inline(base_text)?.ok_or_else(|| {
            usage(format!("'{base_text}' is not an inline surface descriptor"))
        })?;
        let bump = read_bump_file(Path::new(file))?;
        return perturb(base, bump).map(Some);
    }
    Ok(None)
}

fn parse_cyclide(rest: &str) -> Result<SurfaceSpec, Failure> {
    if let Some(surface) = catalog::named_cyclide(rest) {
        let p = match rest {
            "default" => catalog::DEFAULT_CYCLIDE,
            _ => catalog::ELLIPTIC_CYCLIDE,
        };
        return Ok(SurfaceSpec {
            surface,
            resolved: ResolvedSurface {
                kind: "cyclide".into(),
                parameters: cyclide_parameters(p),
                bump: Vec::new(),
            },
        });
    }
    let parts = parse_float_list(rest, "cyclide parameters")?;
    let [major, minor, offset]: [f64; 3] = parts.try_into().map_err(|_| {
        usage(format!("cyclide needs major,minor,offset or a fixture name, got '{rest}'"))
    })?;
    let surface = Surface::cyclide(major, minor, offset).map_err(|e| usage(e.to_string()))?;
    Ok(SurfaceSpec {
        surface,
        resolved: ResolvedSurface {
            kind: "cyclide".into(),
            parameters: cyclide_parameters([major, minor, offset]),
            bump: Vec::new(),
        },
    })
}

fn cyclide_parameters(p: [f64; 3]) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([("major", p[0]), ("minor", p[1]), ("offset", p[2])])
}

fn perturb(base: SurfaceSpec, bump: Bump) -> Result<SurfaceSpec, Failure> {
    let terms: Vec<[f64; 4]> = bump
        .terms
        .iter()
        .map(|t| [t.m as f64, t.k as f64, t.amplitude, t.phase])
        .collect();
    let surface =
        Surface::perturb_normal(base.surface, bump).map_err(|e| usage(e.to_string()))?;
    Ok(SurfaceSpec {
        surface,
        resolved: ResolvedSurface {
            kind: format!("perturbed {}", base.resolved.kind),
            parameters: base.resolved.parameters,
            bump: terms,
        },
    })
}

fn parse_file(path: &Path) -> Result<SurfaceSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut kind = None;
    let mut fields: BTreeMap<String, f64> = BTreeMap::new();
    let mut terms = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            usage(format!("{}:{}: expected key = value", path.display(), number + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "kind" => kind = Some(value.to_string()),
            "bump" => terms.push(parse_bump_term(value).map_err(|f| {
                usage(format!("{}:{}: {}", path.display(), number + 1, f.message))
            })?),
            _ => {
                let parsed = parse_float(value, key).map_err(|f| {
                    usage(format!("{}:{}: {}", path.display(), number + 1, f.message))
                })?;
                fields.insert(key.to_string(), parsed);
            }
        }
    }
    let kind = kind.ok_or_else(|| usage(format!("{}: missing kind", path.display())))?;
    let take = |name: &str| -> Result<f64, Failure> {
        fields
            .get(name)
            .copied()
            .ok_or_else(|| usage(format!("{}: kind {kind} needs {name}", path.display())))
    };
    let base = match kind.as_str() {
        "clifford" => SurfaceSpec {
            surface: Surface::clifford(),
            resolved: ResolvedSurface {
                kind,
                parameters: BTreeMap::new(),
                bump: Vec::new(),
            },
        },
        "homogeneous" => {
            let radius = take("radius")?;
            SurfaceSpec {
                surface: Surface::homogeneous(radius).map_err(|e| usage(e.to_string()))?,
                resolved: ResolvedSurface {
                    kind,
                    parameters: BTreeMap::from([("radius", radius)]),
                    bump: Vec::new(),
                },
            }
        }
        "cyclide" => {
            let p = [take("major")?, take("minor")?, take("offset")?];
            SurfaceSpec {
                surface: Surface::cyclide(p[0], p[1], p[2])
                    .map_err(|e| usage(e.to_string()))?,
                resolved: ResolvedSurface {
                    kind,
                    parameters: cyclide_parameters(p),
                    bump: Vec::new(),
                },
            }
        }
        other => {
            return Err(usage(format!(
                "{}: unknown kind '{other}' (clifford, homogeneous, cyclide)",
                path.display()
            )))
        }
    };
    if terms.is_empty() {
        Ok(base)
    } else {
        perturb(base, Bump::new(terms))
    }
}

fn read_bump_file(path: &Path) -> Result<Bump, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut terms = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let body = line.strip_prefix("bump").map(|r| r.trim_start_matches([' ', '='])).unwrap_or(line);
        terms.push(parse_bump_term(body).map_err(|f| {
            usage(format!("{}:{}: {}", path.display(), number + 1, f.message))
        })?);
    }
    if terms.is_empty() {
        return Err(usage(format!("{}: no bump terms found", path.display())));
    }
    Ok(Bump::new(terms))
}

fn parse_bump_term(text: &str) -> Result<BumpTerm, Failure> {
    let parts = parse_float_list(text, "bump term")?;
    let [m, k, amplitude, phase]: [f64; 4] = parts.try_into().map_err(|_| {
        usage(format!("bump term needs m, k, amplitude, phase, got '{text}'"))
    })?;
    if m.fract() != 0.0 || k.fract() != 0.0 {
        return Err(usage(format!("bump frequencies must be integers, got '{text}'")));
    }
    Ok(BumpTerm { m: m as i32, k: k as i32, amplitude, phase })
}

pub fn parse_float(text: &str, what: &str) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| usage(format!("{what}: '{text}' is not a finite number")))
}

pub fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',').map(|part| parse_float(part, what)).collect()
}

/// Parses `x,y,z,w`, requires a nonzero vector, and normalizes it.
pub fn parse_pole(text: &str) -> Result<SpherePoint, Failure> {
    let parts = parse_float_list(text, "pole")?;
    let v: [f64; 4] = parts
        .try_into()
        .map_err(|_| usage(format!("pole needs four components x,y,z,w, got '{text}'")))?;
    if vec4::norm(&v) < 1e-12 {
        return Err(usage("pole must be a nonzero vector".to_string()));
    }
    SpherePoint::new(vec4::normalize(&v))
        .map_err(|_| usage(format!("pole '{text}' cannot be normalized")))
}

/// Grid sizes are powers of two between 32 and 512.
pub fn check_resolution(n: usize) -> Result<usize, Failure> {
    if n.is_power_of_two() && (32..=512).contains(&n) {
        Ok(n)
    } else {
        Err(usage(format!("resolution {n} must be a power of two in [32, 512]")))
    }
}
