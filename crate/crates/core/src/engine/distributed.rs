//! Message-level simulation of the DISH round.
//!
//! Each agent only sees its own iterate, row `i` of `Z`, and the `(x_j, λ_j)`
//! messages delivered by its neighbors. Rounds are synchronous: every agent
//! posts to every neighbor, then every agent updates from its inbox.

use nalgebra::DVector;

use super::compact::{local_matrices, local_update, RunState, Stepsizes};
use super::UpdateSchedule;
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
}

/// Per-receiver inboxes for one round.
#[derive(Debug, Clone, Default)]
pub struct Mailbox {
    inboxes: Vec<Vec<Message>>,
}

impl Mailbox {
    pub fn new(n: usize) -> Self {
        Self { inboxes: vec![Vec::new(); n] }
    }

    pub fn post(&mut self, msg: Message) {
        self.inboxes[msg.to].push(msg);
    }

    /// Send phase: every agent posts its current `(x_i, λ_i)` to each neighbor.
    pub fn broadcast(instance: &ProblemInstance, agents: &[AgentState]) -> Self {
        let graph = instance.topology().graph();
        let mut mailbox = Self::new(agents.len());
        for agent in agents {
            for &j in graph.neighbors(agent.id) {
                mailbox.post(Message { from: agent.id, to: j, x: agent.x.clone(), lambda: agent.lambda.clone() });
            }
        }
        mailbox
    }

    pub fn inbox(&self, agent: usize) -> &[Message] {
        &self.inboxes[agent]
    }

    pub fn message_count(&self) -> usize {
        self.inboxes.iter().map(Vec::len).sum()
    }
}

pub fn agents_from_state(state: &RunState, d: usize) -> Vec<AgentState> {
    let n = state.x.len() / d;
    (0..n)
        .map(|i| AgentState {
            id: i,
            x: state.x.rows(i * d, d).into_owned(),
            lambda: state.lambda.rows(i * d, d).into_owned(),
        })
        .collect()
}

pub fn state_from_agents(agents: &[AgentState], k: usize) -> RunState {
    let d = agents.first().map_or(0, |a| a.x.len());
    let mut x = DVector::zeros(agents.len() * d);
    let mut lambda = DVector::zeros(agents.len() * d);
    for a in agents {
        x.rows_mut(a.id * d, d).copy_from(&a.x);
        lambda.rows_mut(a.id * d, d).copy_from(&a.lambda);
    }
    RunState { x, lambda, k }
}

/// Local update of every agent from its own state and inbox (lines 5–6 of
/// the distributed loop). `k` selects each agent's update kind.
pub fn step_distributed(
    agents: &[AgentState],
    mailbox: &Mailbox,
    instance: &ProblemInstance,
    schedule: &UpdateSchedule,
    steps: &Stepsizes,
    k: usize,
) -> Result<Vec<AgentState>> {
    steps.validate(instance.n())?;
    let topo = instance.topology();
    let d = instance.d();
    let mut out = Vec::with_capacity(agents.len());
    for agent in agents {
        let i = agent.id;
        let z_ii = topo.z_ij(i, i);
        let mut sum_x = vec![0.0; d];
        let mut sum_l = vec![0.0; d];
        for &j in topo.graph().neighbors(i) {
            let msg = mailbox
                .inbox(i)
                .iter()
                .find(|m| m.from == j)
                .ok_or(DishError::ProtocolViolation { agent: i, from: j })?;
            let z_ij = topo.z_ij(i, j);
            for c in 0..d {
                sum_x[c] += z_ij * msg.x[c];
                sum_l[c] += z_ij * msg.lambda[c];
            }
        }
        let self_w = 1.0 - z_ii;
        let w_x: Vec<f64> = (0..d).map(|c| self_w * agent.x[c] - sum_x[c]).collect();
        let w_l: Vec<f64> = (0..d).map(|c| self_w * agent.lambda[c] - sum_l[c]).collect();

        let kind = schedule.kind_at(i, k);
        let objective = instance.objective(i);
        let mats = local_matrices(kind, objective, agent.x.as_slice(), steps.mu, z_ii)?;
        let mut x_next = DVector::zeros(d);
        let mut l_next = DVector::zeros(d);
        let mut scratch = vec![0.0; 2 * d];
        local_update(
            objective,
            &mats,
            steps.a[i],
            steps.b[i],
            steps.mu,
            agent.x.as_slice(),
            agent.lambda.as_slice(),
            &w_x,
            &w_l,
            x_next.as_mut_slice(),
            l_next.as_mut_slice(),
            &mut scratch,
        );
        if x_next.iter().chain(l_next.iter()).any(|v| !v.is_finite()) {
            return Err(DishError::Divergence { iteration: k });
        }
        out.push(AgentState { id: i, x: x_next, lambda: l_next });
    }
    Ok(out)
}

/// Drives synchronous rounds and counts delivered messages.
#[derive(Debug)]
pub struct DistributedEngine<'a> {
    instance: &'a ProblemInstance,
    schedule: &'a UpdateSchedule,
    steps: &'a Stepsizes,
    agents: Vec<AgentState>,
    k: usize,
    messages: usize,
}

impl<'a> DistributedEngine<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        schedule: &'a UpdateSchedule,
        steps: &'a Stepsizes,
        init: &RunState,
    ) -> Result<Self> {
        instance.check_stacked(&init.x)?;
        instance.check_stacked(&init.lambda)?;
        steps.validate(instance.n())?;
        Ok(Self { instance, schedule, steps, agents: agents_from_state(init, instance.d()), k: init.k, messages: 0 })
    }

    /// One send/update round; returns the number of messages exchanged.
    pub fn round(&mut self) -> Result<usize> {
        let mailbox = Mailbox::broadcast(self.instance, &self.agents);
        let sent = mailbox.message_count();
        self.agents = step_distributed(&self.agents, &mailbox, self.instance, self.schedule, self.steps, self.k)?;
        self.k += 1;
        self.messages += sent;
        Ok(sent)
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn state(&self) -> RunState {
        state_from_agents(&self.agents, self.k)
    }

    pub fn total_messages(&self) -> usize {
        self.messages
    }
}
