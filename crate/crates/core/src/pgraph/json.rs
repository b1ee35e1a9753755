use serde::{Deserialize, Serialize};

use super::{Kind, PGraph};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub kind: Kind,
    #[serde(default)]
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    pub labels: Vec<String>,
}

/// On-disk form of a graph. Plans add `term`, problems add `goal`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<String>>,
}

impl GraphDoc {
    pub fn from_graph(g: &PGraph) -> Self {
        GraphDoc {
            vertices: g
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, v)| VertexDoc {
                    id: v.id.clone(),
                    kind: v.kind,
                    initial: g.initial().contains(&i),
                })
                .collect(),
            edges: g
                .edges()
                .map(|(a, b, labels)| EdgeDoc {
                    from: g.id(a).to_owned(),
                    to: g.id(b).to_owned(),
                    labels: labels.iter().cloned().collect(),
                })
                .collect(),
            actions: g.actions().iter().cloned().collect(),
            observations: g.observations().iter().cloned().collect(),
            term: None,
            goal: None,
        }
    }

    pub fn to_graph(&self) -> Result<PGraph> {
        let mut b = PGraph::builder();
        for v in &self.vertices {
            b.vertex(v.id.clone(), v.kind, v.initial);
        }
        for e in &self.edges {
            b.edge(e.from.clone(), e.to.clone(), e.labels.iter().cloned());
        }
        b.actions(self.actions.iter().cloned())
            .observations(self.observations.iter().cloned());
        b.build()
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }
}

impl PGraph {
    pub fn from_json(text: &str) -> Result<PGraph> {
        GraphDoc::parse(text)?.to_graph()
    }

    pub fn to_json(&self) -> String {
        GraphDoc::from_graph(self).to_json()
    }
}
