//! Resolves the geometry inputs a reward spec needs.

use texreward::atlas::{bake_vertex_scalar, RangeTag, ScalarMap};
use texreward::curvature::{normalize_scalar_field, principal_curvatures, CurvatureData, Which};
use texreward::field::{build_uv_field, smooth_uv_field, UVVectorField};
use texreward::io;
use texreward::mesh::{Adjacency, Mesh};
use texreward::rewards::{RewardContext, RewardSpec, TermKind};
use texreward::symmetry::{default_max_residual, estimate_symmetry_plane, mirror_pairs, MirrorPairSet};

use crate::output::Run;
use crate::{AuxArgs, CliError, WhichArg};

#[derive(Default)]
pub struct Aux {
    pub field: Option<UVVectorField<f64>>,
    pub curv_unit: Option<ScalarMap<f64>>,
    pub curv_signed: Option<ScalarMap<f64>>,
    pub pairs: Option<MirrorPairSet<f64>>,
}

impl Aux {
    pub fn context(&self) -> RewardContext<'_, f64> {
        RewardContext {
            field: self.field.as_ref(),
            curvature_unit: self.curv_unit.as_ref(),
            curvature_signed: self.curv_signed.as_ref(),
            pairs: self.pairs.as_ref(),
        }
    }
}

pub fn which(w: WhichArg) -> Which {
    match w {
        WhichArg::Min => Which::Min,
        WhichArg::Max => Which::Max,
    }
}

struct Geometry {
    mesh: Mesh<f64>,
    adj: Adjacency,
    curvature: Option<CurvatureData<f64>>,
}

struct Lazy<'a> {
    args: &'a AuxArgs,
    flip_v: bool,
    geometry: Option<Geometry>,
}

impl Lazy<'_> {
    fn geometry(&mut self, run: &mut Run, kind: TermKind, flag: &str) -> Result<&mut Geometry, CliError> {
        if self.geometry.is_none() {
            let Some(path) = &self.args.mesh else {
                return Err(CliError::Input(format!("term `{}` needs {flag} or --mesh", kind.as_str())));
            };
            run.input(path)?;
            let mesh: Mesh<f64> = io::load_mesh(path, self.flip_v)?;
            let adj = Adjacency::build(&mesh);
            self.geometry = Some(Geometry { mesh, adj, curvature: None });
        }
        Ok(self.geometry.as_mut().expect("just set"))
    }

    fn curvature(&mut self, run: &mut Run, kind: TermKind, flag: &str) -> Result<&Geometry, CliError> {
        let rings = self.args.rings;
        let g = self.geometry(run, kind, flag)?;
        if g.curvature.is_none() {
            g.curvature = Some(principal_curvatures(&g.mesh, &g.adj, rings)?);
        }
        Ok(g)
    }

    fn baked(&mut self, run: &mut Run, kind: TermKind, range: RangeTag, size: (usize, usize)) -> Result<ScalarMap<f64>, CliError> {
        let flag = if range == RangeTag::Unit { "--curv-unit" } else { "--curv-signed" };
        let clip = self.args.clip;
        let g = self.curvature(run, kind, flag)?;
        let curv = g.curvature.as_ref().expect("computed");
        let values = normalize_scalar_field(&curv.mean_h, range, clip)?;
        Ok(bake_vertex_scalar(&g.mesh, &values, size.0, size.1, range)?.0)
    }
}

/// Loads or derives every input the spec's terms require (and nothing else).
pub fn resolve(run: &mut Run, args: &AuxArgs, flip_v: bool, spec: &RewardSpec, size: (usize, usize)) -> Result<Aux, CliError> {
    let mut lazy = Lazy { args, flip_v, geometry: None };
    let mut aux = Aux::default();
    let needs = |k: TermKind| spec.kinds().any(|x| x == k);

    if needs(TermKind::Alignment) {
        aux.field = Some(match &args.field {
            Some(p) => {
                run.input(p)?;
                io::load_field(p)?
            }
            None => {
                let (smooth, w) = (args.smooth, which(args.which));
                let g = lazy.curvature(run, TermKind::Alignment, "--field")?;
                let raw = build_uv_field(&g.mesh, &g.adj, g.curvature.as_ref().expect("computed"), w);
                smooth_uv_field(&raw, &g.adj, smooth).0
            }
        });
    }
    if needs(TermKind::Emphasis) {
        aux.curv_unit = Some(match &args.curv_unit {
            Some(p) => {
                run.input(p)?;
                io::load_scalar_map(p)?
            }
            None => lazy.baked(run, TermKind::Emphasis, RangeTag::Unit, size)?,
        });
    }
    if needs(TermKind::Colorization) {
        aux.curv_signed = Some(match &args.curv_signed {
            Some(p) => {
                run.input(p)?;
                io::load_scalar_map(p)?
            }
            None => lazy.baked(run, TermKind::Colorization, RangeTag::SignedUnit, size)?,
        });
    }
    if needs(TermKind::Symmetry) {
        aux.pairs = Some(match &args.pairs {
            Some(p) => {
                run.input(p)?;
                io::load_pairs(p)?
            }
            None => {
                let max_residual = args.max_residual;
                let g = lazy.geometry(run, TermKind::Symmetry, "--pairs")?;
                let plane = estimate_symmetry_plane(&g.mesh)?;
                if plane.ambiguous {
                    run.warn("symmetry plane is ambiguous (near-equal covariance eigenvalues)".into());
                }
                let limit = max_residual.unwrap_or_else(|| default_max_residual(&g.mesh));
                mirror_pairs(&g.mesh, &g.adj, &plane, limit)
            }
        });
    }
    Ok(aux)
}
