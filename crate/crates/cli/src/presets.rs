//! Study files bundled into the binary.

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset { name: $name, text: include_str!(concat!("../../../presets/", $name, ".toml")) }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("n24-phi025"),
    preset!("n24-phi050"),
    preset!("n24-phi075"),
    preset!("n18-phi025"),
    preset!("n18-phi050"),
    preset!("n18-phi075"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
