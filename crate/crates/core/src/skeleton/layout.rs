use std::collections::BTreeMap;
use std::sync::OnceLock;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NTU25_JSON: &str = include_str!("../../layouts/ntu25.json");

/// Joint naming, bone topology and body-part grouping for a skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLayout {
    pub name: String,
    pub names: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "parts")]
    pub part_map: BTreeMap<String, Vec<usize>>,
    /// Left/right joint pairs swapped by a spatial flip.
    #[serde(default)]
    pub mirror: Vec<(usize, usize)>,
}

impl JointLayout {
    /// The 25-joint Kinect v2 layout used by the NTU RGB+D recordings.
    pub fn ntu25() -> JointLayout {
        static LAYOUT: OnceLock<JointLayout> = OnceLock::new();
        LAYOUT
            .get_or_init(|| {
                let layout: JointLayout =
                    serde_json::from_str(NTU25_JSON).expect("embedded ntu25 layout parses");
                layout.validate().expect("embedded ntu25 layout is valid");
                layout
            })
            .clone()
    }

    /// A layout without topology: no bones, one part holding every joint.
    pub fn generic(joint_count: usize) -> JointLayout {
        let mut part_map = BTreeMap::new();
        part_map.insert("all".to_string(), (0..joint_count).collect());
        JointLayout {
            name: "generic".to_string(),
            names: (0..joint_count).map(|i| format!("j{i}")).collect(),
            edges: Vec::new(),
            part_map,
            mirror: Vec::new(),
        }
    }

    /// Resolves a layout by the name used in the JSON sequence format.
    pub fn by_name(name: &str, joint_count: usize) -> Result<JointLayout> {
        match name {
            "ntu25" => {
                let layout = JointLayout::ntu25();
                if layout.joint_count() != joint_count {
                    return Err(Error::InvalidLayout(format!(
                        "ntu25 layout needs 25 joints, sequence has {joint_count}"
                    )));
                }
                Ok(layout)
            }
            "generic" => Ok(JointLayout::generic(joint_count)),
            other => Err(Error::InvalidLayout(format!("unknown layout {other:?}"))),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.joint_count();
        if v == 0 {
            return Err(Error::InvalidLayout("layout has no joints".into()));
        }
        for &(a, b) in &self.edges {
            if a >= v || b >= v || a == b {
                return Err(Error::InvalidLayout(format!("bad edge ({a}, {b})")));
            }
        }
        for &(a, b) in &self.mirror {
            if a >= v || b >= v {
                return Err(Error::InvalidLayout(format!("bad mirror pair ({a}, {b})")));
            }
        }
        self.check_partition()?;
        if self.name == "ntu25" && !self.is_tree() {
            return Err(Error::InvalidLayout("ntu25 bones must form a tree".into()));
        }
        Ok(())
    }

    /// Checks that the part sets are disjoint and cover every joint.
    pub fn check_partition(&self) -> Result<()> {
        let v = self.joint_count();
        let mut owner: Vec<Option<&str>> = vec![None; v];
        for (part, joints) in &self.part_map {
            for &j in joints {
                if j >= v {
                    return Err(Error::PartMapIncomplete(format!(
                        "part {part} names joint {j} outside 0..{v}"
                    )));
                }
                if let Some(prev) = owner[j] {
                    return Err(Error::PartMapIncomplete(format!(
                        "joint {j} is in both {prev} and {part}"
                    )));
                }
                owner[j] = Some(part);
            }
        }
        if let Some(j) = owner.iter().position(Option::is_none) {
            return Err(Error::PartMapIncomplete(format!("joint {j} has no part")));
        }
        Ok(())
    }

    /// True when the bones connect all joints without cycles.
    pub fn is_tree(&self) -> bool {
        let v = self.joint_count();
        if self.edges.len() + 1 != v {
            return false;
        }
        let mut parent: Vec<usize> = (0..v).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    pub fn part_of(&self, joint: usize) -> Option<&str> {
        self.part_map
            .iter()
            .find(|(_, joints)| joints.contains(&joint))
            .map(|(name, _)| name.as_str())
    }

    /// Symmetric adjacency with self-loops, row-normalized so every row sums to 1.
    pub fn normalized_adjacency(&self) -> Array2<f64> {
        let v = self.joint_count();
        let mut a = Array2::<f64>::eye(v);
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        for mut row in a.rows_mut() {
            let s = row.sum();
            row.mapv_inplace(|x| x / s);
        }
        a
    }

    /// `perm[j]` is the joint whose values land on joint `j` after a left/right flip.
    pub fn flip_permutation(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.joint_count()).collect();
        for &(a, b) in &self.mirror {
            perm[a] = b;
            perm[b] = a;
        }
        perm
    }
}
