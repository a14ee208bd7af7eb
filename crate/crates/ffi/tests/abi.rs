use std::ffi::{CStr, CString};
use std::ptr;

use netwave_ffi::*;

fn last_error() -> String {
    let p = nw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn marcum_matches_closed_form() {
    let mut q = 0.0;
    let s = unsafe { nw_marcum_q(1, 0.0, 2.0, &mut q) };
    assert_eq!(s, NwStatus::Ok);
    assert!((q - (-2.0f64).exp()).abs() < 1e-14);
}

#[test]
fn invalid_arguments_set_the_error_message() {
    let mut q = 0.0;
    assert_eq!(
        unsafe { nw_marcum_q(0, 1.0, 1.0, &mut q) },
        NwStatus::InvalidArgument
    );
    assert!(last_error().contains("order"));
    assert_eq!(
        unsafe { nw_marcum_q(1, 1.0, 1.0, ptr::null_mut()) },
        NwStatus::NullPointer
    );
    let mut p = 0.0;
    assert_eq!(
        unsafe { nw_detection_probability(10.0, 2.0, &mut p) },
        NwStatus::InvalidArgument
    );
}

#[test]
fn campaign_round_trip() {
    let name = CString::new("four_node").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { nw_scenario_load(name.as_ptr(), &mut s) },
        NwStatus::Ok
    );
    assert_eq!(unsafe { nw_scenario_nodes(s) }, 4);
    assert_eq!(unsafe { nw_scenario_frames(s) }, 30);
    assert_eq!(
        unsafe { nw_scenario_set_frames(s, 0) },
        NwStatus::InvalidArgument
    );
    assert_eq!(unsafe { nw_scenario_set_frames(s, 2) }, NwStatus::Ok);

    let mut reference = ptr::null_mut();
    let mut designed = ptr::null_mut();
    assert_eq!(
        unsafe { nw_campaign_run(s, 0.0, &mut reference) },
        NwStatus::Ok
    );
    assert_eq!(
        unsafe { nw_campaign_run(s, 0.15, &mut designed) },
        NwStatus::Ok
    );
    assert_eq!(unsafe { nw_campaign_len(designed) }, 2);

    let mut r = NwFrameRecord::default();
    let mut d = NwFrameRecord::default();
    for k in 0..2 {
        assert_eq!(
            unsafe { nw_campaign_frame(reference, k, &mut r) },
            NwStatus::Ok
        );
        assert_eq!(
            unsafe { nw_campaign_frame(designed, k, &mut d) },
            NwStatus::Ok
        );
        assert_eq!(d.frame, k + 1);
        assert!(d.pcrlb_trace <= r.pcrlb_trace);
    }
    let (mut pd, mut bench) = (0.0, 0.0);
    assert_eq!(
        unsafe { nw_campaign_detection(designed, 0, 3, &mut pd, &mut bench) },
        NwStatus::Ok
    );
    assert!(pd <= bench + 1e-6);
    assert_eq!(
        unsafe { nw_campaign_detection(designed, 0, 4, &mut pd, &mut bench) },
        NwStatus::OutOfRange
    );
    assert_eq!(
        unsafe { nw_campaign_frame(designed, 2, &mut d) },
        NwStatus::OutOfRange
    );
    assert_eq!(
        unsafe { nw_campaign_run(s, 3.0, &mut designed) },
        NwStatus::InvalidArgument
    );
    assert!(designed.is_null());

    unsafe {
        nw_campaign_free(reference);
        nw_scenario_free(s);
        nw_campaign_free(ptr::null_mut());
        nw_scenario_free(ptr::null_mut());
    }
}

#[test]
fn bad_scenarios_report_scenario_or_io_status() {
    let text = CString::new("schema_version = 1\nname = \"x\"\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { nw_scenario_from_toml(text.as_ptr(), &mut s) },
        NwStatus::Scenario
    );
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let path = CString::new("/nonexistent/dir/s.toml").unwrap();
    let status = unsafe { nw_scenario_load(path.as_ptr(), &mut s) };
    assert_eq!(status, NwStatus::Io);
    assert_eq!(
        unsafe { nw_scenario_load(ptr::null(), &mut s) },
        NwStatus::NullPointer
    );
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/netwave.h")).unwrap();
    for name in [
        "nw_marcum_q",
        "nw_scenario_load",
        "nw_campaign_run",
        "nw_campaign_frame",
        "NwScenario",
        "NW_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
