mod common;

use common::arb_record;
use proptest::prelude::*;
use track_enrich::assign::{build_trajectories, AssignConfig};
use track_enrich::broadcast::{degrade_labelled, DegradeConfig};
use track_enrich::evaluate::{evaluate_half, identity_switches, ErrorReport};
use track_enrich::forecast::{ForecastModel, ModelOrders};
use track_enrich::ingest::MatchHalf;
use track_enrich::pipeline::{train, EnrichConfig, EnrichedHalf};
use track_enrich::synthetic::{synthetic_half, synthetic_match, SyntheticConfig};
use track_enrich::{Execution, Team};

fn short(seed: u64, secs: f64) -> SyntheticConfig {
    SyntheticConfig { seed, half_duration: secs, ..Default::default() }
}

fn model() -> ForecastModel {
    let training = synthetic_match(&short(11, 900.0));
    train(&training, ModelOrders::default(), 1.0, Execution::Parallel).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_frame_assignment_is_injective(record in arb_record()) {
        let model = ForecastModel::random_walk(1.0, 2.0, 1.0);
        let tracks = build_trajectories(&record, &model, &AssignConfig::default(), Execution::Sequential).unwrap();
        for team in Team::BOTH {
            let tt = tracks.team(team);
            prop_assert_eq!(tt.outfield.len(), 10);
            prop_assert_eq!(tt.links.len(), record.frames.len());
            for (frame, links) in record.frames.iter().zip(&tt.links) {
                let seen: Vec<_> = frame.outfielders(team).collect();
                prop_assert_eq!(links.len(), seen.len());
                let mut sorted = links.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), links.len());
                for (&traj, pos) in links.iter().zip(&seen) {
                    let p = tt.outfield[traj].point_at(frame.time).unwrap();
                    prop_assert!(p.observed);
                    prop_assert_eq!(p.pos, *pos);
                }
            }
            let observed: usize = tt.outfield.iter().map(|tr| tr.points().iter().filter(|p| p.observed).count()).sum();
            let visible: usize = record.frames.iter().map(|f| f.outfielders(team).count()).sum();
            prop_assert_eq!(observed, visible);
        }
    }
}

fn run(truth: &MatchHalf, model: &ForecastModel, cfg: &DegradeConfig, exec: Execution) -> (EnrichedHalf, usize) {
    let labelled = degrade_labelled(truth, cfg, exec).unwrap();
    let enriched = EnrichedHalf::build(&labelled.record, model, &EnrichConfig::default(), exec).unwrap();
    let switches = identity_switches(&enriched.tracks, &labelled).unwrap();
    (enriched, switches)
}

#[test]
fn full_visibility_reproduces_ground_truth() {
    let model = model();
    let truth = synthetic_half(&short(3, 600.0), 1);
    let cfg = DegradeConfig { visibility_radius: 1e6, ..Default::default() };
    let (enriched, switches) = run(&truth, &model, &cfg, Execution::Parallel);
    assert_eq!(switches, 0);
    let eval = evaluate_half(&enriched, &truth, Execution::Parallel).unwrap();
    assert!(!eval.in_phase.is_empty());
    for f in &eval.in_phase {
        assert_eq!(f.total_squared_error, 0.0, "frame at {}", f.time);
    }
}

#[test]
fn occluded_estimates_are_worse_than_recent_sightings() {
    let model = model();
    let truth = synthetic_half(&short(4, 900.0), 2);
    let (enriched, _) = run(&truth, &model, &DegradeConfig::default(), Execution::Parallel);
    let eval = evaluate_half(&enriched, &truth, Execution::Parallel).unwrap();
    let report = ErrorReport::from_halves(&[eval]);
    let s = &report.pooled;
    let all = s.mean_all_in_phase.unwrap();
    let offcam = s.mean_offcam_in_phase.unwrap();
    let prev = s.mean_prev_frame_observed.unwrap();
    assert!(prev < all && all < offcam, "prev {prev}, all {all}, off-camera {offcam}");
    assert!(s.predictions > 0 && s.prev_frame_observed_count > 0);
}

#[test]
fn execution_modes_agree_bit_for_bit() {
    let model = model();
    let truth = synthetic_half(&short(5, 400.0), 1);
    let cfg = DegradeConfig::default();
    let (par, _) = run(&truth, &model, &cfg, Execution::Parallel);
    let (seq, _) = run(&truth, &model, &cfg, Execution::Sequential);
    assert_eq!(par.tracks, seq.tracks);
    assert_eq!(
        par.frames_every(0.5, Execution::Parallel).unwrap(),
        seq.frames_every(0.5, Execution::Sequential).unwrap()
    );
    let rp = ErrorReport::from_halves(&[evaluate_half(&par, &truth, Execution::Parallel).unwrap()]);
    let rs = ErrorReport::from_halves(&[evaluate_half(&seq, &truth, Execution::Sequential).unwrap()]);
    assert_eq!(rp.to_json(), rs.to_json());
}
