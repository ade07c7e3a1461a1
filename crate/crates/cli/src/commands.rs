use std::path::Path;

use serde::Serialize;
use serde_json::json;

use texreward::atlas::{bake_vertex_scalar, RangeTag};
use texreward::camera::{camera_pose, CameraParams};
use texreward::curvature::{normalize_scalar_field, principal_curvatures};
use texreward::field::{build_uv_field, smooth_uv_field};
use texreward::gradcheck::{check_gradient, GradCheckReport};
use texreward::io::{self, RasterHeader};
use texreward::linalg::Vec3;
use texreward::mesh::{Adjacency, Mesh};
use texreward::optimize::{self, OptConfig};
use texreward::rewards::{alignment_count, evaluate, evaluate_term, RewardContext, RewardSpec, TermKind};
use texreward::scalar::round_sig9;
use texreward::symmetry::{default_max_residual, estimate_symmetry_plane, mirror_pairs};
use texreward::texture::{GradientMap, Texture};

use crate::inputs::{self, which};
use crate::output::{manifest_for, Run};
use crate::{
    BakeArgs, CameraArgs, CliError, EvalArgs, FieldArgs, GradCheckArgs, OptimizeArgs, RangeArg, SymmetryArgs,
};

const GRAD_CHECK_MAX_SIDE: usize = 32;

fn r9(x: f64) -> f64 {
    round_sig9(x)
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

fn load_mesh(run: &mut Run, path: &Path, flip_v: bool) -> Result<(Mesh<f64>, Adjacency), CliError> {
    run.input(path)?;
    let mesh: Mesh<f64> = io::load_mesh(path, flip_v)?;
    for (what, list) in [
        ("degenerate triangle(s) dropped", &mesh.diagnostics.dropped_triangles),
        ("vertex(es) without a usable normal", &mesh.diagnostics.zero_normal_vertices),
    ] {
        if !list.is_empty() {
            run.warn(format!("{}: {} {what}", path.display(), list.len()));
        }
    }
    let adj = Adjacency::build(&mesh);
    Ok((mesh, adj))
}

fn load_spec(run: &mut Run, path: &Path) -> Result<RewardSpec, CliError> {
    run.input(path)?;
    let spec = io::load_spec(path)?;
    spec.validate()?;
    Ok(spec)
}

fn load_texture(run: &mut Run, path: &Path) -> Result<Texture<f64>, CliError> {
    run.input(path)?;
    Ok(io::load_texture(path)?)
}

fn write_raster(run: &mut Run, raw: &Path, header: RasterHeader, values: &[f64]) -> Result<(), CliError> {
    run.write(raw, &io::encode_raw_f32(values))?;
    run.write(&io::sidecar_path(raw), &io::encode_header(&header))
}

fn write_gradient(run: &mut Run, raw: &Path, grad: &GradientMap<f64>) -> Result<(), CliError> {
    let header = RasterHeader { width: grad.width, height: grad.height, channels: 3, range: RangeTag::Raw };
    write_raster(run, raw, header, &grad.drgb)?;
    run.write(&io::preview_path(raw), &io::encode_gradient_preview(grad)?)
}

pub fn bake_curvature(args: &BakeArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("bake-curvature");
    let (mesh, adj) = load_mesh(&mut run, &args.mesh, flip_v)?;
    let curv = principal_curvatures(&mesh, &adj, args.rings)?;
    if !curv.diagnostics.unresolved.is_empty() {
        run.warn(format!("{} vertex(es) have no curvature estimate", curv.diagnostics.unresolved.len()));
    }
    let range = match args.range {
        RangeArg::Unit => RangeTag::Unit,
        RangeArg::SignedUnit => RangeTag::SignedUnit,
    };
    let values = normalize_scalar_field(&curv.mean_h, range, args.clip)?;
    let (map, diag) = bake_vertex_scalar(&mesh, &values, args.size.width, args.size.height, range)?;
    if diag.skipped_degenerate_uv > 0 {
        run.warn(format!("{} zero-area uv triangle(s) skipped", diag.skipped_degenerate_uv));
    }
    let header = RasterHeader { width: map.width, height: map.height, channels: 1, range };
    write_raster(&mut run, &args.out, header, &map.values)?;
    run.write(&io::coverage_path(&args.out), &io::encode_coverage(&map.coverage))?;
    let preview = if args.dilate_preview { map.dilated() } else { map.clone() };
    run.write(&io::preview_path(&args.out), &io::encode_scalar_preview(&preview)?)?;
    println!(
        "baked {}x{} ({} covered texels) to {}",
        map.width,
        map.height,
        map.covered_count(),
        args.out.display()
    );
    run.finish(&manifest_for(&args.out), args)
}

pub fn project_field(args: &FieldArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("project-field");
    let (mesh, adj) = load_mesh(&mut run, &args.mesh, flip_v)?;
    let curv = principal_curvatures(&mesh, &adj, args.rings)?;
    let raw = build_uv_field(&mesh, &adj, &curv, which(args.which));
    let (field, diag) = smooth_uv_field(&raw, &adj, args.smooth);
    if field.valid_count() == 0 {
        return Err(CliError::Input(format!("{}: no valid anchor in the projected field", args.mesh.display())));
    }
    if diag.unresolved > 0 {
        run.warn(format!("{} anchor(s) remain invalid after in-filling", diag.unresolved));
    }
    run.write(&args.out, &io::encode_field_jsonl(&field))?;

    let mut background = match &args.texture {
        Some(p) => io::texture_background(&load_texture(&mut run, p)?),
        None => {
            let (w, h) = (args.overlay_size.width, args.overlay_size.height);
            let ones = vec![1.0; mesh.vertex_count()];
            let (cov, _) = bake_vertex_scalar(&mesh, &ones, w, h, RangeTag::Raw)?;
            io::coverage_background(w, h, &cov.coverage)
        }
    };
    let seg = (background.width().max(background.height()) as f64 / 64.0).max(3.0);
    let png = io::draw_field_overlay(&mut background, &field, seg)?;
    run.write(&io::preview_path(&args.out), &png)?;
    println!(
        "{} of {} anchors valid ({} before smoothing, {} filled)",
        field.valid_count(),
        field.anchors.len(),
        raw.valid_count(),
        diag.filled
    );
    run.finish(&manifest_for(&args.out), args)
}

pub fn find_symmetry(args: &SymmetryArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("find-symmetry");
    let (mesh, adj) = load_mesh(&mut run, &args.mesh, flip_v)?;
    let plane = estimate_symmetry_plane(&mesh)?;
    let limit = args.max_residual.unwrap_or_else(|| default_max_residual(&mesh));
    if !(limit >= 0.0) {
        return Err(CliError::Input(format!("--max-residual must be non-negative, got {limit}")));
    }
    let pairs = mirror_pairs(&mesh, &adj, &plane, limit);
    let warning = plane
        .ambiguous
        .then_some("ambiguous symmetry plane: the two smallest covariance eigenvalues are nearly equal");
    if let Some(w) = warning {
        run.warn(w.to_string());
    }
    let v3 = |v: Vec3<f64>| [r9(v.x), r9(v.y), r9(v.z)];
    let doc = json!({
        "centroid": v3(plane.centroid),
        "normal": v3(plane.normal),
        "eigenvalues": plane.eigenvalues.map(r9),
        "ambiguous": plane.ambiguous,
        "warning": warning,
        "max_residual": r9(limit),
        "candidates": pairs.diagnostics.candidates,
        "filtered": pairs.diagnostics.filtered,
        "pairs": pairs.pairs.len(),
    });
    run.write(&args.out, &json_bytes(&doc))?;
    run.write(&args.out.with_extension("pairs.jsonl"), &io::encode_pairs_jsonl(&pairs))?;
    println!("{} mirror pairs ({} filtered)", pairs.pairs.len(), pairs.diagnostics.filtered);
    run.finish(&manifest_for(&args.out), args)
}

fn per_term_json(spec: &RewardSpec, values: &[f64]) -> Vec<serde_json::Value> {
    spec.terms
        .iter()
        .zip(values)
        .map(|(t, v)| json!({"kind": t.kind.as_str(), "weight": r9(t.weight), "value": r9(*v)}))
        .collect()
}

pub fn eval(args: &EvalArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("eval");
    let spec = load_spec(&mut run, &args.spec)?;
    let tex = load_texture(&mut run, &args.texture)?;
    let aux = inputs::resolve(&mut run, &args.aux, flip_v, &spec, (tex.width, tex.height))?;
    let ctx = aux.context();
    let result = evaluate(&spec, &tex, &ctx)?;
    let mut doc = json!({
        "value": r9(result.value),
        "per_term": per_term_json(&spec, &result.per_term),
        "texture": {"width": tex.width, "height": tex.height},
    });
    if let Some(field) = &aux.field {
        if !(args.tau > 0.0 && args.tau <= 1.0) {
            return Err(CliError::Input(format!("--tau must be in (0, 1], got {}", args.tau)));
        }
        let c = alignment_count(&tex, field, args.tau);
        doc["alignment_count"] = json!({"aligned": c.aligned, "total": c.total, "tau": r9(args.tau)});
    }
    run.write(&args.out, &json_bytes(&doc))?;
    if let Some(g) = &args.grad_out {
        write_gradient(&mut run, g, &result.gradient)?;
    }
    println!("reward {}", r9(result.value));
    run.finish(&manifest_for(&args.out), args)
}

fn report_json(name: String, r: &GradCheckReport, width: usize, rel_tol: f64) -> serde_json::Value {
    let worst = r.worst_index.map(|i| json!({"col": (i / 3) % width, "row": (i / 3) / width, "channel": i % 3}));
    json!({
        "term": name,
        "passed": r.passed(rel_tol),
        "max_rel_err": r9(r.max_rel_err),
        "max_abs_err": r9(r.max_abs_err),
        "checked": r.checked,
        "worst": worst,
    })
}

fn corrupt(grad: &mut GradientMap<f64>) {
    for g in &mut grad.drgb {
        *g = 1.5 * *g + 1e-3;
    }
}

pub fn grad_check(args: &GradCheckArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("grad-check");
    let spec = load_spec(&mut run, &args.spec)?;
    let corrupt_kind = match &args.corrupt_term {
        Some(k) => Some(
            TermKind::ALL
                .into_iter()
                .find(|t| t.as_str() == k)
                .ok_or_else(|| CliError::Input(format!("unknown term kind `{k}`")))?,
        ),
        None => None,
    };
    let textures: Vec<(String, Texture<f64>)> = match &args.texture {
        Some(p) => {
            if args.trials > 1 {
                run.warn("--trials is ignored when --texture is given".into());
            }
            vec![(p.display().to_string(), load_texture(&mut run, p)?)]
        }
        None => (0..args.trials.max(1) as u64)
            .map(|t| {
                let seed = args.seed + t;
                (format!("noise:{seed}"), Texture::noise(args.size.width, args.size.height, seed))
            })
            .collect(),
    };
    let (w, h) = (textures[0].1.width, textures[0].1.height);
    if w > GRAD_CHECK_MAX_SIDE || h > GRAD_CHECK_MAX_SIDE {
        return Err(CliError::Input(format!(
            "texture is {w}x{h}; grad-check is limited to {GRAD_CHECK_MAX_SIDE}x{GRAD_CHECK_MAX_SIDE}"
        )));
    }
    let aux = inputs::resolve(&mut run, &args.aux, flip_v, &spec, (w, h))?;
    let ctx = aux.context();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (label, tex) in &textures {
        let mut reports = Vec::new();
        for (i, term) in spec.terms.iter().enumerate() {
            let mut analytic = evaluate_term(term, tex, &ctx)?.gradient;
            if corrupt_kind == Some(term.kind) {
                corrupt(&mut analytic);
            }
            let f = |t: &Texture<f64>| evaluate_term(term, t, &ctx).map(|r| r.value).unwrap_or(f64::NAN);
            let rep = check_gradient(tex, &analytic, args.eps, args.abs_tol, f);
            let name = format!("{}#{i}", term.kind.as_str());
            if !rep.passed(args.rel_tol) {
                failures.push((label.clone(), name.clone(), rep));
            }
            reports.push(report_json(name, &rep, w, args.rel_tol));
        }
        let mut combined = evaluate(&spec, tex, &ctx)?.gradient;
        if let Some(k) = corrupt_kind {
            for (term, _) in spec.terms.iter().zip(0..).filter(|(t, _)| t.kind == k) {
                let mut delta = evaluate_term(term, tex, &ctx)?.gradient;
                let before = delta.clone();
                corrupt(&mut delta);
                combined.add_scaled(&delta, term.weight);
                combined.add_scaled(&before, -term.weight);
            }
        }
        let f = |t: &Texture<f64>| evaluate(&spec, t, &ctx).map(|r| r.value).unwrap_or(f64::NAN);
        let rep = check_gradient(tex, &combined, args.eps, args.abs_tol, f);
        if !rep.passed(args.rel_tol) {
            failures.push((label.clone(), "combined".to_string(), rep));
        }
        reports.push(report_json("combined".into(), &rep, w, args.rel_tol));
        trials.push(json!({"texture": label, "terms": reports}));
    }
    let doc = json!({
        "passed": failures.is_empty(),
        "eps": args.eps,
        "rel_tol": args.rel_tol,
        "abs_tol": args.abs_tol,
        "trials": trials,
    });
    run.write(&args.out, &json_bytes(&doc))?;
    run.finish(&manifest_for(&args.out), args)?;
    if failures.is_empty() {
        println!("gradient check passed ({} texture(s), {} term(s))", textures.len(), spec.terms.len());
        return Ok(());
    }
    let lines: Vec<String> = failures
        .iter()
        .map(|(label, term, rep)| {
            let at = rep
                .worst_index
                .map(|i| format!(" at col {}, row {}, channel {}", (i / 3) % w, (i / 3) / w, i % 3))
                .unwrap_or_default();
            format!("{term} on {label}: max rel err {:.3e}, max abs err {:.3e}{at}", rep.max_rel_err, rep.max_abs_err)
        })
        .collect();
    Err(CliError::Check(lines.join("; ")))
}

pub fn optimize(args: &OptimizeArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("optimize");
    let spec = load_spec(&mut run, &args.spec)?;
    let init = match args.init.strip_prefix("noise:") {
        Some(seed) => {
            let seed: u64 =
                seed.parse().map_err(|_| CliError::Input(format!("bad noise seed in --init `{}`", args.init)))?;
            Texture::noise(args.size.width, args.size.height, seed)
        }
        None => load_texture(&mut run, Path::new(&args.init))?,
    };
    let seed = args.init.strip_prefix("noise:").and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = OptConfig {
        learning_rate: args.lr,
        steps: args.steps,
        clamp: !args.no_clamp,
        seed,
        log_every: args.log_every,
    };
    cfg.validate()?;
    let aux = inputs::resolve(&mut run, &args.aux, flip_v, &spec, (init.width, init.height))?;
    let ctx: RewardContext<'_, f64> = aux.context();

    run.write(&args.out.join("init.png"), &io::encode_texture_png(&init)?)?;
    let mut snapshots = Vec::new();
    let trace = optimize::optimize_texture_with(&init, &spec, &ctx, &cfg, &mut optimize::PlainAscent, |e, tex| {
        if args.snapshots {
            snapshots.push((e.step, io::encode_texture_png(tex)));
        }
    })?;
    for (step, png) in snapshots {
        run.write(&args.out.join("snapshots").join(format!("step_{step:06}.png")), &png?)?;
    }
    let fin = &trace.final_texture;
    run.write(&args.out.join("final.png"), &io::encode_texture_png(fin)?)?;
    let header = RasterHeader { width: fin.width, height: fin.height, channels: 3, range: RangeTag::Unit };
    write_raster(&mut run, &args.out.join("final.raw"), header, &fin.rgb)?;
    run.write(&args.out.join("trace.csv"), &io::encode_trace_csv(&spec, &trace.entries))?;
    let first = trace.entries.first().expect("trace has step 0");
    let last = trace.entries.last().expect("trace has step 0");
    let summary = json!({
        "initial": {"value": r9(first.value), "per_term": per_term_json(&spec, &first.per_term)},
        "final_logged": {"step": last.step, "value": r9(last.value), "per_term": per_term_json(&spec, &last.per_term)},
        "steps": args.steps,
    });
    run.write(&args.out.join("summary.json"), &json_bytes(&summary))?;
    println!("reward {} -> {} over {} steps", r9(first.value), r9(last.value), args.steps);
    run.finish(&args.out.join("manifest.json"), args)
}

pub fn optimize_camera(args: &CameraArgs, flip_v: bool) -> Result<(), CliError> {
    let mut run = Run::new("optimize-camera");
    let (mesh, _) = load_mesh(&mut run, &args.mesh, flip_v)?;
    let init = CameraParams::new(args.elevation, args.azimuth, args.radius, Vec3::zero())
        .map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = OptConfig { learning_rate: args.lr, steps: args.steps, log_every: args.log_every, ..Default::default() };
    let trace = optimize::optimize_camera(&mesh, &init, &cfg, args.sharpness)?;
    let f = trace.final_params;
    let pose = camera_pose(&f).map_err(|e| CliError::Check(e.to_string()))?;
    let entries: Vec<_> = trace
        .entries
        .iter()
        .map(|e| {
            json!({"step": e.step, "elevation": r9(e.params.elevation), "azimuth": r9(e.params.azimuth), "proxy": r9(e.proxy)})
        })
        .collect();
    let doc = json!({
        "final": {
            "elevation": r9(f.elevation),
            "azimuth": r9(f.azimuth),
            "radius": r9(f.radius),
            "matrix": pose.matrix.map(|row| row.map(r9)),
        },
        "trace": entries,
    });
    run.write(&args.out, &json_bytes(&doc))?;
    println!("elevation {} azimuth {}", r9(f.elevation), r9(f.azimuth));
    run.finish(&manifest_for(&args.out), args)
}

