use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use log::{info, warn};
use track_enrich::broadcast::{degrade, degrade_stats};
use track_enrich::evaluate::{
    evaluate_half, occlusion_labels, percentile_frames, write_curve_csv, write_pitch_svg, ErrorReport, FrameError,
    MIN_PERCENTILE_FRAMES,
};
use track_enrich::forecast::ForecastModel;
use track_enrich::ingest::{
    attach_events, read_360_frames, read_discrete, read_events_csv, read_tracking_csv, write_discrete,
    write_enriched, write_errors, write_events_csv, write_tracking_csv, DiscreteMatchRecord, MatchHalf,
};
use track_enrich::pipeline::{train, EnrichedHalf};
use track_enrich::synthetic::synthetic_match;
use track_enrich::Execution;

use crate::config::PipelineConfig;
use crate::Failure;

/// Share of native rows without a ball above which a warning is raised.
const DROPPED_ROWS_WARNING: f64 = 0.05;

fn exec() -> Execution {
    Execution::default()
}

fn output_dir(cfg: &PipelineConfig) -> Result<&Path, Failure> {
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

/// Reads ground truth, attaching events when configured.
fn load_truth(cfg: &PipelineConfig) -> Result<(Vec<MatchHalf>, Vec<String>), Failure> {
    let (home, away) = cfg.tracking().map_err(Failure::Config)?;
    let events = cfg.optional_input("events", &cfg.events).map_err(Failure::Config)?;
    let mut halves = read_tracking_csv(home, away)?;
    if let Some(path) = events {
        attach_events(&mut halves, &read_events_csv(path)?);
    }
    let mut warnings = Vec::new();
    for h in &halves {
        let rows = h.frames.len() + h.dropped_rows;
        if rows > 0 && h.dropped_rows as f64 > DROPPED_ROWS_WARNING * rows as f64 {
            let w = format!("half {}: {} of {rows} rows had no ball and were dropped", h.half_id, h.dropped_rows);
            warn!("{w}");
            warnings.push(w);
        }
    }
    Ok((halves, warnings))
}

fn load_model(cfg: &PipelineConfig) -> Result<ForecastModel, Failure> {
    let path = cfg.model_path();
    if !path.exists() {
        return Err(Failure::Config(format!("model {} does not exist", path.display())));
    }
    Ok(ForecastModel::load(&path)?)
}

fn load_discrete(cfg: &PipelineConfig) -> Result<Vec<DiscreteMatchRecord>, Failure> {
    let path = cfg.discrete_path();
    if !path.exists() {
        return Err(Failure::Config(format!("discrete {} does not exist", path.display())));
    }
    Ok(read_discrete(&path)?)
}

pub fn synthesize(cfg: &PipelineConfig) -> Result<(), Failure> {
    let dir = output_dir(cfg)?;
    let halves = synthetic_match(&cfg.synthetic);
    let (home, away, events) = (dir.join("tracking_home.csv"), dir.join("tracking_away.csv"), dir.join("events.csv"));
    write_tracking_csv(&halves, &home, &away)?;
    write_events_csv(&halves, &events)?;
    println!(
        "synthetic match, seed {}, {} s per half",
        cfg.synthetic.seed, cfg.synthetic.half_duration
    );
    for p in [&home, &away, &events] {
        println!("  wrote {}", p.display());
    }
    Ok(())
}

pub fn train_model(cfg: &PipelineConfig) -> Result<(), Failure> {
    let (halves, _) = load_truth(cfg)?;
    let start = Instant::now();
    let model = train(&halves, cfg.orders, cfg.grid_step, exec())?;
    let path = cfg.model_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    model.save(&path)?;
    println!("fitted on {} grid steps in {:.2} s", model.training_steps, start.elapsed().as_secs_f64());
    let o = model.orders();
    println!("  orders       ar {} ma {} exog {}", o.ar, o.ma, o.exog);
    println!("  ar           {:?}", model.ar);
    println!("  ma           {:?}", model.ma);
    println!("  exog         {:?}", model.exog);
    println!("  intercept    {:.6}", model.intercept);
    println!("  resid_std    {:.4} m", model.resid_std);
    println!("  one_step_std {:.4} m", model.one_step_std);
    println!("  wrote {}", path.display());
    Ok(())
}

pub fn simulate_broadcast(cfg: &PipelineConfig) -> Result<(), Failure> {
    cfg.degrade.validate()?;
    let (halves, _) = load_truth(cfg)?;
    let records = exec()
        .map(&halves, |h| degrade(h, &cfg.degrade, exec()))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let path = cfg.discrete_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    write_discrete(&records, &path)?;
    for (h, r) in halves.iter().zip(&records) {
        let s = degrade_stats(h, r);
        println!(
            "half {}: {} frames, {:.2} visible outfielders per frame, {} hidden",
            h.half_id,
            s.frames,
            s.mean_visible(),
            s.hidden_outfielders
        );
    }
    println!("  wrote {}", path.display());
    Ok(())
}

pub fn enrich(cfg: &PipelineConfig) -> Result<(), Failure> {
    let model = load_model(cfg)?;
    let records = match cfg.optional_input("frames_360", &cfg.frames_360).map_err(Failure::Config)? {
        Some(frames) => {
            let events = cfg.input("events_360", &cfg.events_360).map_err(Failure::Config)?;
            let sb = read_360_frames(frames, events, cfg.home_team.as_deref(), cfg.axis_threshold)?;
            let path = output_dir(cfg)?.join("axis_errors.json");
            write_errors(&sb.errors, &path)?;
            println!("{} frames rejected, wrote {}", sb.errors.len(), path.display());
            sb.halves
        }
        None => load_discrete(cfg)?,
    };
    let dir = output_dir(cfg)?;
    let start = Instant::now();
    let mut frames_in = 0;
    for record in &records {
        let half = EnrichedHalf::build(record, &model, &cfg.enrich(), exec())?;
        let frames = half.frames_every(cfg.output_step, exec())?;
        let path = dir.join(format!("enriched_half{}.json", record.half_id));
        write_enriched(&frames, &path)?;
        frames_in += record.frames.len();
        println!("half {}: {} output frames, wrote {}", record.half_id, frames.len(), path.display());
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "processed {frames_in} input frames in {secs:.3} s ({:.5} s per frame)",
        secs / frames_in.max(1) as f64
    );
    Ok(())
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<(), Failure> {
    let (truth, warnings) = load_truth(cfg)?;
    let records = load_discrete(cfg)?;
    let model = load_model(cfg)?;
    let dir = output_dir(cfg)?;

    let mut enriched = Vec::with_capacity(records.len());
    let mut evals = Vec::with_capacity(records.len());
    for record in &records {
        let half = truth
            .iter()
            .find(|h| h.half_id == record.half_id)
            .ok_or_else(|| Failure::Config(format!("no ground truth for half {}", record.half_id)))?;
        let e = EnrichedHalf::build(record, &model, &cfg.enrich(), exec())?;
        evals.push(evaluate_half(&e, half, exec())?);
        enriched.push(e);
    }
    let report = ErrorReport::from_halves(&evals);

    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json()).with_context(|| format!("cannot write {}", json_path.display()))?;
    let mut table = report.to_table();
    for w in &warnings {
        table.push_str(&format!("warning: {w}\n"));
    }
    let text_path = dir.join("report.txt");
    fs::write(&text_path, &table).with_context(|| format!("cannot write {}", text_path.display()))?;
    write_curve_csv(&report.curve, &dir.join("curve.csv"))?;
    print!("{table}");

    let pooled: Vec<(usize, &FrameError)> =
        evals.iter().enumerate().flat_map(|(i, e)| e.in_phase.iter().map(move |f| (i, f))).collect();
    if pooled.len() < MIN_PERCENTILE_FRAMES {
        warn!("only {} in-phase frames; percentile frames need {MIN_PERCENTILE_FRAMES}", pooled.len());
    } else {
        let frames: Vec<FrameError> = pooled.iter().map(|(_, f)| (*f).clone()).collect();
        for (p, idx) in cfg.percentiles.iter().zip(percentile_frames(&frames, &cfg.percentiles)?) {
            let (h, f) = pooled[idx];
            let half = &enriched[h];
            let snapshot = half.frame_at(f.time)?;
            let labels = occlusion_labels(half, f.time, cfg.degrade.sample_period);
            let path = dir.join(format!("percentile_{p}.svg"));
            write_pitch_svg(&snapshot, &labels, &path)?;
            info!("percentile {p}: half {} t = {:.2} s, wrote {}", evals[h].half_id, f.time, path.display());
        }
    }
    println!("  wrote {}, {}, curve.csv and percentile plots", json_path.display(), text_path.display());
    Ok(())
}
