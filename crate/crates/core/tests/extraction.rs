use lcimpact::extraction::{extract_instances, write_manifest, RejectReason};
use lcimpact::synth::{Scenario, ScenarioSpec};
use lcimpact::{Dataset, RunConfig};

fn scene(spec: ScenarioSpec) -> (Dataset, Scenario) {
    let s = Scenario::build(&spec).unwrap();
    (s.dataset().unwrap(), s)
}

fn default_scene() -> (Dataset, Scenario) {
    scene(ScenarioSpec {
        noise: 0.02,
        seed: 11,
        ..ScenarioSpec::default()
    })
}

fn relabel(ds: &mut Dataset, id: &str, from_t: f64, to_t: f64, lane: i32) {
    let track = ds.tracks.get_mut(id).unwrap();
    for p in track.points.iter_mut().filter(|p| p.t >= from_t && p.t <= to_t) {
        p.lane_id = lane;
    }
}

fn reasons(ds: &Dataset) -> Vec<(String, RejectReason)> {
    let ex = extract_instances(ds, &RunConfig::default()).unwrap();
    ex.rejections
        .into_iter()
        .map(|r| (r.vehicle_id, r.reason))
        .collect()
}

#[test]
fn clean_lane_change_is_extracted_with_neighbors() {
    let (ds, s) = default_scene();
    let ex = extract_instances(&ds, &RunConfig::default()).unwrap();
    assert!(ex.rejections.is_empty(), "{:?}", ex.rejections);
    let [inst] = ex.instances.as_slice() else {
        panic!("expected one instance, got {}", ex.instances.len());
    };
    assert_eq!(inst.sv_id, "sv");
    assert_eq!((inst.original_lane, inst.target_lane), (1, 2));
    assert_eq!(inst.tlv_id.as_deref(), Some("tlv"));
    assert_eq!(inst.lv_id.as_deref(), Some("lv"));
    let tfv: Vec<String> = (1..=6).map(|i| format!("tfv{i:02}")).collect();
    let fv: Vec<String> = (1..=6).map(|i| format!("fv{i:02}")).collect();
    assert_eq!(inst.tfv_ids, tfv);
    assert_eq!(inst.fv_ids, fv);
    assert!((inst.t_sv_s - s.truth.t_sv_s.unwrap()).abs() <= 0.3);
    assert!((inst.t_lane - s.truth.t_lane.unwrap()).abs() <= 0.15);
}

#[test]
fn no_lane_change_yields_nothing() {
    let (ds, _) = scene(ScenarioSpec {
        insertion: None,
        ..ScenarioSpec::default()
    });
    let ex = extract_instances(&ds, &RunConfig::default()).unwrap();
    assert!(ex.instances.is_empty() && ex.rejections.is_empty());
}

#[test]
fn return_to_original_lane_is_multiple_crossings() {
    let (mut ds, _) = default_scene();
    relabel(&mut ds, "sv", 100.0, f64::INFINITY, 1);
    assert_eq!(reasons(&ds), vec![("sv".to_string(), RejectReason::MultipleCrossings)]);
}

#[test]
fn change_from_ramp_lane_is_rejected() {
    let (mut ds, _) = default_scene();
    for p in ds.tracks.get_mut("sv").unwrap().points.iter_mut() {
        if p.lane_id == 1 {
            p.lane_id = 3;
        }
    }
    assert_eq!(reasons(&ds), vec![("sv".to_string(), RejectReason::Ramp)]);
}

#[test]
fn missing_target_leader_is_rejected() {
    let (mut ds, _) = default_scene();
    ds.tracks.remove("tlv");
    assert_eq!(reasons(&ds), vec![("sv".to_string(), RejectReason::NoTlv)]);
}

#[test]
fn short_lateral_history_is_rejected() {
    let (mut ds, s) = default_scene();
    let t_lane = s.truth.t_lane.unwrap();
    ds.tracks
        .get_mut("sv")
        .unwrap()
        .points
        .retain(|p| p.t >= t_lane - 1.0);
    assert_eq!(reasons(&ds), vec![("sv".to_string(), RejectReason::ShortHistory)]);
}

#[test]
fn upstream_entry_into_target_lane_interferes() {
    let (mut ds, _) = default_scene();
    // a follower in the original lane moves into the target lane 10 s later
    relabel(&mut ds, "fv03", 72.0, f64::INFINITY, 2);
    let r = reasons(&ds);
    assert!(
        r.contains(&("sv".to_string(), RejectReason::Interference)),
        "{r:?}"
    );
}

#[test]
fn late_entry_outside_window_does_not_interfere() {
    let (mut ds, s) = default_scene();
    let window_end = s.truth.t_lane.unwrap() + RunConfig::default().window_t;
    relabel(&mut ds, "fv03", window_end + 2.0, f64::INFINITY, 2);
    let ex = extract_instances(&ds, &RunConfig::default()).unwrap();
    assert!(ex.instances.iter().any(|i| i.sv_id == "sv"));
}

#[test]
fn manifest_has_one_line_per_record() {
    let (mut ds, _) = default_scene();
    relabel(&mut ds, "fv03", 72.0, f64::INFINITY, 2);
    let ex = extract_instances(&ds, &RunConfig::default()).unwrap();
    let mut buf = Vec::new();
    write_manifest(&ex, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), ex.instances.len() + ex.rejections.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(matches!(v["record"].as_str(), Some("instance" | "rejection")));
    }
}
