//! Wire formats: task set input and allocation output.

use serde::{Deserialize, Serialize};

use crate::allocator::{Allocation, AllocatorConfig, TaskSet};
use crate::error::Result;
use crate::scalability::ScalabilityCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSpec {
    Linear {
        lambda: f64,
    },
    Cjt {
        p: f64,
    },
    Usl {
        alpha: f64,
        beta: f64,
        #[serde(default = "unit_k")]
        k: f64,
    },
}

fn unit_k() -> f64 {
    1.0
}

impl TaskSpec {
    pub fn to_curve(self) -> Result<ScalabilityCurve<f64>> {
        match self {
            TaskSpec::Linear { lambda } => ScalabilityCurve::linear(lambda),
            TaskSpec::Cjt { p } => ScalabilityCurve::saturating(p),
            TaskSpec::Usl { alpha, beta, k } => ScalabilityCurve::retrograde(alpha, beta, k),
        }
    }

    pub fn from_curve(curve: &ScalabilityCurve<f64>) -> Self {
        match *curve {
            ScalabilityCurve::Linear { lambda } => TaskSpec::Linear { lambda },
            ScalabilityCurve::Saturating { p } => TaskSpec::Cjt { p },
            ScalabilityCurve::Retrograde { alpha, beta, k } => TaskSpec::Usl { alpha, beta, k },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSetFile {
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub epsilon: f64,
}

impl TaskSetFile {
    pub fn task_set(&self) -> Result<TaskSet<f64>> {
        let curves = self.tasks.iter().map(|t| t.to_curve()).collect::<Result<Vec<_>>>()?;
        TaskSet::new(curves)
    }

    pub fn config(&self) -> Result<AllocatorConfig<f64>> {
        AllocatorConfig::new(self.epsilon)
    }

    pub fn from_task_set(tasks: &TaskSet<f64>, epsilon: f64) -> Self {
        TaskSetFile {
            tasks: tasks.curves().iter().map(TaskSpec::from_curve).collect(),
            epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    #[serde(rename = "N")]
    pub agents: usize,
    pub counts: Vec<usize>,
    pub idle: usize,
    pub performance: f64,
    pub per_task: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub scale_heterogeneous: bool,
}

impl From<&Allocation<f64>> for AllocationRecord {
    fn from(a: &Allocation<f64>) -> Self {
        AllocationRecord {
            agents: a.agents,
            counts: a.counts.clone(),
            idle: a.idle,
            performance: a.collective_performance,
            per_task: a.per_task_performance.clone(),
            scale_heterogeneous: a.scale_heterogeneous,
        }
    }
}
