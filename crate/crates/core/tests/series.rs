use std::collections::BTreeMap;

use chrono::NaiveDate;
use chronicle::series::{
    align, exp_transform, load_csv, log_transform, read_csv, read_panel_csv, write_csv, Calendar, Chronicle,
    LoadOptions, Origin,
};
use chronicle::Error;
use proptest::prelude::*;

fn dated(first: NaiveDate, calendar: Calendar, values: Vec<Option<f64>>) -> Chronicle {
    Chronicle::new("price", Origin::Date { first, calendar }, 1.0, values).unwrap()
}

fn abstract_series(label: &str, start: i64, values: Vec<Option<f64>>) -> Chronicle {
    Chronicle::new(label, Origin::Abstract(start as f64), 1.0, values).unwrap()
}

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(
        values in prop::collection::vec(1e-6f64..1e6, 1..200),
        offset in 0i64..3000,
        business in any::<bool>(),
    ) {
        let calendar = if business { Calendar::Business } else { Calendar::Daily };
        let first = calendar.date(calendar.ordinal(NaiveDate::from_ymd_opt(1995, 1, 2).unwrap()) + offset);
        let x = dated(first, calendar, values.iter().copied().map(Some).collect());
        let mut buf = Vec::new();
        write_csv(&mut buf, &[&x]).unwrap();
        let opts = LoadOptions { calendar: Some(calendar), ..LoadOptions::default() };
        let back = read_csv(buf.as_slice(), "price", &opts).unwrap();
        prop_assert_eq!(back.fill_count, 0);
        prop_assert_eq!(&back.chronicle, &x);
        let mut again = Vec::new();
        write_csv(&mut again, &[&back.chronicle]).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn log_exp_identity(values in prop::collection::vec(1e-8f64..1e8, 1..100)) {
        let x = Chronicle::from_values("x", &values).unwrap();
        let y = exp_transform(&log_transform(&x).unwrap());
        for (a, b) in values.iter().zip(y.values()) {
            prop_assert!((b.unwrap() - a).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn align_matches_brute_force(
        specs in prop::collection::vec(
            (-20i64..20, prop::collection::vec(prop::option::weighted(0.8, -100.0f64..100.0), 30..60)),
            1..4,
        ),
    ) {
        let series: Vec<Chronicle> = specs
            .iter()
            .enumerate()
            .map(|(k, (start, v))| abstract_series(&format!("s{k}"), *start, v.clone()))
            .collect();
        let got = align(&series);

        // Oracle: per-tick lookup tables over the common span.
        let maps: Vec<BTreeMap<i64, Option<f64>>> = specs
            .iter()
            .map(|(start, v)| v.iter().enumerate().map(|(i, x)| (start + i as i64, *x)).collect())
            .collect();
        let lo = specs.iter().map(|(s, _)| *s).max().unwrap();
        let hi = specs.iter().map(|(s, v)| s + v.len() as i64 - 1).min().unwrap();
        let mut first_full = None;
        if lo <= hi {
            for t in lo..=hi {
                let started = maps.iter().all(|m| (lo..=t).any(|u| m[&u].is_some()));
                if started {
                    first_full = Some(t);
                    break;
                }
            }
        }
        match first_full {
            None => prop_assert!(got.is_err()),
            Some(t0) => {
                let panel = got.unwrap();
                prop_assert_eq!(panel.origin(), Origin::Abstract(t0 as f64));
                prop_assert_eq!(panel.len() as i64, hi - t0 + 1);
                for (k, m) in maps.iter().enumerate() {
                    for t in t0..=hi {
                        let want = (lo..=t).rev().find_map(|u| m[&u]).unwrap();
                        prop_assert_eq!(panel.column(k)[(t - t0) as usize], want);
                    }
                }
                let again = align(&panel.to_chronicles()).unwrap();
                prop_assert_eq!(again, panel);
            }
        }
    }
}

#[test]
fn weekend_gap_is_not_missing_on_business_calendar() {
    let text = "date,price\n2021-01-08,10\n2021-01-11,11\n2021-01-13,13\n";
    let l = read_csv(text.as_bytes(), "price", &LoadOptions::default()).unwrap();
    assert_eq!(
        l.chronicle.values(),
        &[Some(10.0), Some(11.0), Some(11.0), Some(13.0)]
    );
    assert_eq!(l.fill_count, 1);
}

#[test]
fn long_gap_is_a_data_quality_error() {
    let mut text = String::from("date,price\n2021-01-01,1\n");
    text.push_str("2021-03-01,2\n");
    let opts = LoadOptions {
        calendar: Some(Calendar::Daily),
        max_gap: 10,
    };
    assert!(matches!(
        read_csv(text.as_bytes(), "price", &opts),
        Err(Error::DataQuality(_))
    ));
}

#[test]
fn panel_load_aligns_columns() {
    let text = "date,a,b\n2021-01-04,1,\n2021-01-05,2,20\n2021-01-06,,30\n2021-01-07,4,40\n";
    let p = read_panel_csv(text.as_bytes(), &LoadOptions::default()).unwrap();
    assert_eq!(p.panel.labels(), &["a".to_string(), "b".to_string()]);
    assert_eq!(p.panel.column(0), &[2.0, 2.0, 4.0]);
    assert_eq!(p.panel.column(1), &[20.0, 30.0, 40.0]);
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_csv(dir.path().join("absent.csv"), "price"),
        Err(Error::Io { .. })
    ));
}

#[test]
fn log_of_nonpositive_reports_index() {
    let x = Chronicle::from_values("x", &[1.0, 2.0, 0.0]).unwrap();
    assert!(matches!(log_transform(&x), Err(Error::Domain { index: 2, .. })));
}
