use std::collections::HashMap;

use super::ArgIdError;
use crate::fndata::{Corpus, FrameId, RelationKind};

/// (frame name, FE name) pairs reachable from `fe` of `frame` by following
/// inheritance and subframe mappings from child to parent, depth first.
/// The queried pair comes first; shared ancestors appear once.
pub fn hierarchy_expand(
    corpus: &Corpus,
    frame: FrameId,
    fe: &str,
) -> Result<Vec<(String, String)>, ArgIdError> {
    let mut parents: HashMap<(FrameId, &str), Vec<(FrameId, &str)>> = HashMap::new();
    for rel in &corpus.relations {
        if !matches!(rel.kind, RelationKind::Inheritance | RelationKind::SubFrame) {
            continue;
        }
        for (parent_fe, child_fe) in &rel.fe_mappings {
            parents
                .entry((rel.child, child_fe.as_str()))
                .or_default()
                .push((rel.parent, parent_fe.as_str()));
        }
    }
    let name = |id: FrameId| {
        corpus
            .frame(id)
            .map(|f| f.name.clone())
            .unwrap_or_else(|| id.to_string())
    };

    let mut out: Vec<(FrameId, &str)> = Vec::new();
    let mut path: Vec<(FrameId, &str)> = Vec::new();
    fn visit<'a>(
        node: (FrameId, &'a str),
        parents: &HashMap<(FrameId, &'a str), Vec<(FrameId, &'a str)>>,
        path: &mut Vec<(FrameId, &'a str)>,
        out: &mut Vec<(FrameId, &'a str)>,
    ) -> Result<(), (FrameId, String)> {
        if path.contains(&node) {
            return Err((node.0, node.1.to_string()));
        }
        if out.contains(&node) {
            return Ok(());
        }
        out.push(node);
        path.push(node);
        for &p in parents.get(&node).into_iter().flatten() {
            visit(p, parents, path, out)?;
        }
        path.pop();
        Ok(())
    }
    visit((frame, fe), &parents, &mut path, &mut out)
        .map_err(|(f, fe)| ArgIdError::CycleDetected { frame: name(f), fe })?;
    Ok(out
        .into_iter()
        .map(|(f, fe)| (name(f), fe.to_string()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fndata::{CoreType, Frame, FrameElement, FrameRelation};

    fn corpus(chain: &[(&str, &str)], relations: &[(usize, usize)]) -> Corpus {
        let mut c = Corpus::default();
        for (i, (frame, fe)) in chain.iter().enumerate() {
            let id = FrameId(i as u32 + 1);
            c.frames.insert(
                id,
                Frame {
                    id,
                    name: frame.to_string(),
                    frame_elements: vec![FrameElement {
                        name: fe.to_string(),
                        core_type: CoreType::Core,
                    }],
                    lexical_units: vec![],
                },
            );
        }
        for &(child, parent) in relations {
            c.relations.push(FrameRelation {
                kind: RelationKind::Inheritance,
                parent: FrameId(parent as u32 + 1),
                child: FrameId(child as u32 + 1),
                fe_mappings: vec![(chain[parent].1.to_string(), chain[child].1.to_string())],
            });
        }
        c
    }

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn unmapped_fe_is_its_own_closure() {
        let c = corpus(&[("Commerce_buy", "Buyer")], &[]);
        assert_eq!(
            hierarchy_expand(&c, FrameId(1), "Buyer").unwrap(),
            pairs(&[("Commerce_buy", "Buyer")])
        );
    }

    #[test]
    fn buyer_maps_to_recipient() {
        let c = corpus(
            &[("Commerce_buy", "Buyer"), ("Getting", "Recipient")],
            &[(0, 1)],
        );
        assert_eq!(
            hierarchy_expand(&c, FrameId(1), "Buyer").unwrap(),
            pairs(&[("Commerce_buy", "Buyer"), ("Getting", "Recipient")])
        );
    }

    #[test]
    fn three_level_chain_in_order() {
        let c = corpus(&[("A", "x"), ("B", "y"), ("C", "z")], &[(0, 1), (1, 2)]);
        assert_eq!(
            hierarchy_expand(&c, FrameId(1), "x").unwrap(),
            pairs(&[("A", "x"), ("B", "y"), ("C", "z")])
        );
    }

    #[test]
    fn cycle_is_an_error() {
        let c = corpus(&[("A", "x"), ("B", "y")], &[(0, 1), (1, 0)]);
        assert!(matches!(
            hierarchy_expand(&c, FrameId(1), "x"),
            Err(ArgIdError::CycleDetected { .. })
        ));
    }

    #[test]
    fn other_relations_are_ignored() {
        let mut c = corpus(&[("A", "x"), ("B", "y")], &[(0, 1)]);
        c.relations[0].kind = RelationKind::Other;
        assert_eq!(hierarchy_expand(&c, FrameId(1), "x").unwrap().len(), 1);
    }
}
