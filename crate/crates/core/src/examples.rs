//! Bundled example instances.

pub const PAPER_GNEP: &str = include_str!("../instances/paper-gnep.json");
pub const PAPER_QUOPT: &str = include_str!("../instances/paper-quopt.json");
pub const SELFMAP_BOX: &str = include_str!("../instances/selfmap-box.json");
pub const FPT_EXAMPLE: &str = include_str!("../instances/fpt-example.json");
pub const CUBE_QUASICONCAVE: &str = include_str!("../instances/cube-quasiconcave.json");

/// Registry in a fixed order: `(name, file contents)`.
pub const ALL: &[(&str, &str)] = &[
    ("paper-gnep", PAPER_GNEP),
    ("paper-quopt", PAPER_QUOPT),
    ("selfmap-box", SELFMAP_BOX),
    ("fpt-example", FPT_EXAMPLE),
    ("cube-quasiconcave", CUBE_QUASICONCAVE),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ALL.iter().map(|(n, _)| *n)
}
