//! Programs shipped with the crate: small demonstration pipelines plus the
//! five lattice workloads the benchmark harness and the test suites share.

pub const MEDIAN: &str = include_str!("../fixtures/median.gtl");
pub const MEDIAN_PRIM: &str = include_str!("../fixtures/median_prim.gtl");
pub const SUM_LOOP: &str = include_str!("../fixtures/sum_loop.gtl");
pub const SKIP_LOOP: &str = include_str!("../fixtures/skip_loop.gtl");
pub const POLY_WRAP: &str = include_str!("../fixtures/poly_wrap.gtl");
pub const POLY_BARE: &str = include_str!("../fixtures/poly_bare.gtl");
pub const BEAR: &str = include_str!("../fixtures/bear.gtl");
pub const ZOO: &str = include_str!("../fixtures/zoo.gtl");
pub const CONTROL: &str = include_str!("../fixtures/control.gtl");
pub const BOUNDARY_HEAVY: &str = include_str!("../fixtures/boundary_heavy.gtl");
pub const TYPED_HEAVY: &str = include_str!("../fixtures/typed_heavy.gtl");
pub const DEEP_DATA: &str = include_str!("../fixtures/deep_data.gtl");
pub const BLAME_GROWTH: &str = include_str!("../fixtures/blame_growth.gtl");

/// Every fixture, for whole-corpus tests (round-tripping, agreement, ...).
pub const ALL: &[&str] = &[
    MEDIAN,
    MEDIAN_PRIM,
    SUM_LOOP,
    SKIP_LOOP,
    POLY_WRAP,
    POLY_BARE,
    BEAR,
    ZOO,
    CONTROL,
    BOUNDARY_HEAVY,
    TYPED_HEAVY,
    DEEP_DATA,
    BLAME_GROWTH,
];

/// The lattice workloads, paired with their names for reports.
pub const LATTICE: &[(&str, &str)] = &[
    ("control", CONTROL),
    ("boundary_heavy", BOUNDARY_HEAVY),
    ("typed_heavy", TYPED_HEAVY),
    ("deep_data", DEEP_DATA),
    ("blame_growth", BLAME_GROWTH),
];
