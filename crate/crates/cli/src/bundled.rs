//! Configs compiled into the binary.

pub struct Bundled {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        pub const BUNDLED: &[Bundled] = &[
            $(Bundled { name: $name, source: include_str!(concat!("../configs/", $name, ".ini")) },)*
        ];
    };
}

bundled!(
    "lax_friedrichs_shock",
    "lax_friedrichs_rarefaction",
    "counterexample",
    "staggered_control",
    "perturbed_geometry",
    "advection_indicator",
    "broken_flux",
    "moving_vertex",
    "local_timestep",
    "remap_minmod",
    "selfsimilar_burgers",
);

pub fn find(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}
