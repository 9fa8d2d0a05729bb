use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Ambient, Constants, Domain, HHSInstance, Relation, Symmetry};
use crate::error::{Error, Result};
use crate::space::{GraphDoc, MetricGraph};

pub const INSTANCE_FORMAT: &str = "hullcube/instance/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AmbientDoc {
    Graph(GraphDoc),
    Product(Vec<GraphDoc>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDoc {
    pub name: String,
    pub graph: GraphDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoPointDoc {
    pub from: usize,
    pub to: usize,
    pub vertex: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoTableDoc {
    pub from: usize,
    pub to: usize,
    pub table: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub format: String,
    pub ambient: AmbientDoc,
    pub domains: Vec<DomainDoc>,
    pub relations: Vec<Vec<Relation>>,
    pub pi: Vec<Vec<usize>>,
    #[serde(default)]
    pub rho_points: Vec<RhoPointDoc>,
    #[serde(default)]
    pub rho_tables: Vec<RhoTableDoc>,
    pub colors: Vec<Vec<usize>>,
    #[serde(default)]
    pub symmetries: Vec<Symmetry>,
    pub constants: Constants,
}

impl HHSInstance {
    pub fn to_doc(&self) -> InstanceDoc {
        let ambient = match &self.ambient {
            Ambient::Graph(g) => AmbientDoc::Graph(g.to_doc()),
            Ambient::Product(f) => AmbientDoc::Product(f.iter().map(|g| g.to_doc()).collect()),
        };
        InstanceDoc {
            format: INSTANCE_FORMAT.into(),
            ambient,
            domains: self
                .domains
                .iter()
                .map(|d| DomainDoc {
                    name: d.name.clone(),
                    graph: d.graph.to_doc(),
                })
                .collect(),
            relations: self.rel.clone(),
            pi: self.pi.clone(),
            rho_points: self
                .rho_point
                .iter()
                .map(|(&(from, to), &vertex)| RhoPointDoc { from, to, vertex })
                .collect(),
            rho_tables: self
                .rho_table
                .iter()
                .map(|(&(from, to), t)| RhoTableDoc {
                    from,
                    to,
                    table: t.clone(),
                })
                .collect(),
            colors: self.colors.clone(),
            symmetries: self.symmetries.clone(),
            constants: self.constants,
        }
    }

    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        if doc.format != INSTANCE_FORMAT {
            return Err(Error::Format(format!("format: expected {INSTANCE_FORMAT}, got {}", doc.format)));
        }
        let graph = |g: &GraphDoc, at: String| MetricGraph::from_doc(g).map_err(|e| Error::Format(format!("{at}: {e}")));
        let ambient = match &doc.ambient {
            AmbientDoc::Graph(g) => Ambient::Graph(graph(g, "ambient.graph".into())?),
            AmbientDoc::Product(f) => Ambient::product(
                f.iter()
                    .enumerate()
                    .map(|(i, g)| graph(g, format!("ambient.product[{i}]")))
                    .collect::<Result<_>>()?,
            )?,
        };
        let domains = doc
            .domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(Domain {
                    name: d.name.clone(),
                    graph: graph(&d.graph, format!("domains[{i}].graph"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rho_point = BTreeMap::new();
        for (i, r) in doc.rho_points.iter().enumerate() {
            if rho_point.insert((r.from, r.to), r.vertex).is_some() {
                return Err(Error::Format(format!("rho_points[{i}]: duplicate pair")));
            }
        }
        let mut rho_table = BTreeMap::new();
        for (i, r) in doc.rho_tables.iter().enumerate() {
            if rho_table.insert((r.from, r.to), r.table.clone()).is_some() {
                return Err(Error::Format(format!("rho_tables[{i}]: duplicate pair")));
            }
        }
        HHSInstance::new(
            ambient,
            domains,
            doc.relations.clone(),
            doc.pi.clone(),
            rho_point,
            rho_table,
            doc.colors.clone(),
            doc.symmetries.clone(),
            doc.constants,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_doc(&doc)
    }
}
