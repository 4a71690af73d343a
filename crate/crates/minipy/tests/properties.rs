use std::rc::Rc;

use geoframe::{Column, ColumnData, Crs, Frame};
use geoframe::geo::{Geometry, Point};
use minipy::{run, MemorySink, Output, Policy};
use proptest::prelude::*;

fn eval(expr: &str) -> Output {
    let src = format!("def main():\n    return {expr}\n");
    match run(&src, "main", &[], Policy::with_tools(Vec::<String>::new()), Rc::new(MemorySink::new())) {
        Ok(o) => o.value,
        Err(e) => panic!("{expr}: {}", e.exception),
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn points_frame(values: &[i64]) -> Frame {
    let geoms = values
        .iter()
        .enumerate()
        .map(|(i, _)| Some(Geometry::Point(Point::new(i as f64, 0.0))))
        .collect();
    Frame::from_columns(
        vec![
            Column::new("v", ColumnData::Int(values.iter().map(|v| Some(*v)).collect())),
            Column::new("geometry", ColumnData::Geometry(geoms)),
        ],
        Some("geometry"),
        Some(Crs::wgs84()),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integer_division_floors(a in -1000i64..1000, b in prop_oneof![-50i64..-1, 1i64..50]) {
        let expected_mod = a - b * floor_div(a, b);
        prop_assert_eq!(
            eval(&format!("({a}) // ({b}), ({a}) % ({b})")),
            Output::Tuple(vec![Output::Int(floor_div(a, b)), Output::Int(expected_mod)])
        );
    }

    #[test]
    fn sorted_matches_native_sort(mut xs in prop::collection::vec(-100i64..100, 0..20)) {
        let list = format!("{xs:?}");
        let out = eval(&format!("sorted({list}, reverse=True)"));
        xs.sort_by(|a, b| b.cmp(a));
        prop_assert_eq!(out, Output::List(xs.into_iter().map(Output::Int).collect()));
    }

    #[test]
    fn mask_filter_counts_rows(values in prop::collection::vec(-20i64..20, 0..30), t in -20i64..20) {
        let frame = points_frame(&values);
        let src = format!("def execute(df_1):\n    out = df_1[df_1['v'] > {t}]\n    df_1['v'] = 0\n    return len(out), int(out['v'].sum()) if len(out) else 0\n");
        let out = run(&src, "execute", &[frame.clone()], Policy::with_tools(["pandas"]), Rc::new(MemorySink::new())).unwrap();
        let kept: Vec<i64> = values.iter().copied().filter(|v| *v > t).collect();
        prop_assert_eq!(out.value, Output::Tuple(vec![Output::Int(kept.len() as i64), Output::Int(kept.iter().sum())]));
        prop_assert_eq!(frame, points_frame(&values));
    }
}

#[test]
fn empty_frame_masks_stay_boolean() {
    let frame = points_frame(&[]);
    let src = "def execute(df_1):\n    m = (df_1['v'] > 0) & (df_1['v'] < 5)\n    return len(df_1[m]), len(df_1[~m])\n";
    let out = run(src, "execute", &[frame], Policy::with_tools(["pandas"]), Rc::new(MemorySink::new())).unwrap();
    assert_eq!(out.value, Output::Tuple(vec![Output::Int(0), Output::Int(0)]));
}
