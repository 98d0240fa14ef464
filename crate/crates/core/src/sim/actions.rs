use super::episode::{AgentStatus, Episode};

pub const STAY_ID: &str = "stay_still";
pub const FIGHT_ID: &str = "fight_the_shooter";

/// Concrete action an identifier resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    StayStill,
    Region(usize),
    Spot(usize),
    Exit(usize),
    Agent(usize),
    Fight,
}

impl Action {
    pub fn is_move(self) -> bool {
        !matches!(self, Action::StayStill)
    }
}

/// Identifiers offered to `agent` right now, in a fixed order: stay, then
/// neighboring regions, same-region agents, hiding spots, exits and finally
/// the fight action. Empty for agents that left or were incapacitated.
pub fn offered_actions(episode: &Episode<'_>, agent: usize) -> Vec<String> {
    episode
        .offered(agent)
        .into_iter()
        .map(|a| episode.action_id(a))
        .collect()
}

impl Episode<'_> {
    pub(crate) fn offered(&self, agent: usize) -> Vec<Action> {
        let me = &self.agents[agent];
        if me.status != AgentStatus::Active {
            return Vec::new();
        }
        let mut out = vec![Action::StayStill];
        for &(nb, _) in self.layout.neighbors(me.region) {
            out.push(Action::Region(nb));
        }
        for (j, other) in self.agents.iter().enumerate() {
            if j != agent && other.status == AgentStatus::Active && other.region == me.region {
                out.push(Action::Agent(j));
            }
        }
        if self.incident {
            for &s in self.layout.spots_in(me.region) {
                out.push(Action::Spot(s));
            }
            for &e in self.layout.exits_in(me.region) {
                out.push(Action::Exit(e));
            }
            if self.shooter_visible_to(agent) {
                out.push(Action::Fight);
            }
        }
        out
    }

    pub(crate) fn action_id(&self, action: Action) -> String {
        match action {
            Action::StayStill => STAY_ID.to_string(),
            Action::Region(r) => self.layout.region_id(r).to_string(),
            Action::Spot(s) => self.layout.spots[s].id.clone(),
            Action::Exit(e) => self.layout.exits[e].id.clone(),
            Action::Agent(j) => self.agents[j].id.clone(),
            Action::Fight => FIGHT_ID.to_string(),
        }
    }
}
