//! Workspaces and scenarios shipped with the tool.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    /// Hook-on trigger the example is written for.
    pub trigger: &'static str,
    #[serde(skip)]
    pub workspace_json: &'static str,
}

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "accept-all",
        description: "Accepts every transaction and leaves a trace line.",
        trigger: "both",
        workspace_json: include_str!("../assets/examples/accept-all.json"),
    },
    Example {
        name: "carbon-offset",
        description: "On every outgoing payment, sends 1% of the amount to a carbon offset account.",
        trigger: "outgoing",
        workspace_json: include_str!("../assets/examples/carbon-offset.json"),
    },
    Example {
        name: "deny-under-20",
        description: "Rejects incoming payments smaller than 20 XRP.",
        trigger: "incoming",
        workspace_json: include_str!("../assets/examples/deny-under-20.json"),
    },
    Example {
        name: "blacklist",
        description: "Rejects payments from accounts on a fixed block list.",
        trigger: "incoming",
        workspace_json: include_str!("../assets/examples/blacklist.json"),
    },
];

pub const CARBON_OFFSET_SCENARIO: &str = include_str!("../assets/scenarios/carbon-offset.json");

pub fn get(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}
