//! Seizure burden, periods of interest and burden classes for one mask.

use neoseiz::clinical::{burden, classify_burden, detect_poi};
use neoseiz::signal_io::AnnotationMask;

fn main() {
    // eight hours with a cluster of seizures in hour three
    let events = [(100.0, 160.0), (7300.0, 7420.0), (7800.0, 7845.0), (8200.0, 8500.0), (20000.0, 20020.0)];
    let mask = AnnotationMask::from_intervals("sda", &events, 8 * 3600);

    let b = burden(&mask);
    println!("hourly seconds {:?}", b.hourly);
    println!("total {:.1} min, max hourly {:.1} min/h", b.total_min, b.max_hourly_min);
    let c = classify_burden(&b);
    println!("high total burden: {}, high hourly burden: {}", c.total_high, c.hourly_high);

    for w in detect_poi(&mask) {
        println!(
            "window {} from {:>5} s: {:>4} s seizure, {} long events{}",
            w.index,
            w.start_s,
            w.seizure_seconds,
            w.long_events,
            if w.is_poi { "  <- POI" } else { "" }
        );
    }
}
