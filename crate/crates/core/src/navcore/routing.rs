//! Fastest-path routing over current effective segment speeds.

use std::cmp::Ordering;

use crate::geomap::{NodeId, RoadGraph, SegmentId};

use super::NavError;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub segments: Vec<SegmentId>,
    pub length: f64,
    pub eta: f64,
}

impl RouteResult {
    /// Stable textual id, e.g. `s01>s02>s03`.
    pub fn route_id(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.0.as_str())
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// Traversal time in seconds of `length_m` at `speed_kph`.
pub fn travel_time_s(length_m: f64, speed_kph: f64) -> f64 {
    length_m * 3.6 / speed_kph
}

#[derive(Debug, Clone)]
struct Label {
    eta: f64,
    length: f64,
    path: Vec<usize>,
}

fn cmp_labels(graph: &RoadGraph, a: &Label, b: &Label) -> Ordering {
    a.eta.total_cmp(&b.eta).then_with(|| {
        let segs = graph.segments();
        a.path
            .iter()
            .map(|&i| &segs[i].id)
            .cmp(b.path.iter().map(|&i| &segs[i].id))
    })
}

/// Minimum-time path from `origin` to `dest`. `speed_kph(i)` gives the
/// effective speed of segment index `i`. Equal times are broken by the
/// lexicographically smallest segment-id sequence.
pub fn fastest_route(
    graph: &RoadGraph,
    origin: &NodeId,
    dest: &NodeId,
    speed_kph: impl Fn(usize) -> f64,
) -> Result<RouteResult, NavError> {
    for n in [origin, dest] {
        if graph.node(n).is_none() {
            return Err(NavError::UnknownNode(n.0.clone()));
        }
    }
    if origin == dest {
        return Err(NavError::SameOriginDest(origin.0.clone()));
    }

    let node_ids: Vec<&NodeId> = graph.nodes().iter().map(|n| &n.id).collect();
    let idx_of = |id: &NodeId| node_ids.iter().position(|n| *n == id).unwrap();
    let mut best: Vec<Option<Label>> = vec![None; node_ids.len()];
    let mut settled = vec![false; node_ids.len()];
    best[idx_of(origin)] = Some(Label {
        eta: 0.0,
        length: 0.0,
        path: Vec::new(),
    });

    loop {
        let next = (0..node_ids.len())
            .filter(|&i| !settled[i] && best[i].is_some())
            .min_by(|&a, &b| {
                cmp_labels(graph, best[a].as_ref().unwrap(), best[b].as_ref().unwrap())
            });
        let Some(u) = next else { break };
        settled[u] = true;
        if node_ids[u] == dest {
            break;
        }
        let label = best[u].clone().unwrap();
        for &si in graph.outgoing(node_ids[u]) {
            let seg = &graph.segments()[si];
            let v = idx_of(&seg.to);
            if settled[v] {
                continue;
            }
            let mut path = label.path.clone();
            path.push(si);
            let cand = Label {
                eta: label.eta + travel_time_s(seg.length, speed_kph(si)),
                length: label.length + seg.length,
                path,
            };
            let better = best[v]
                .as_ref()
                .is_none_or(|cur| cmp_labels(graph, &cand, cur) == Ordering::Less);
            if better {
                best[v] = Some(cand);
            }
        }
    }

    let label = best[idx_of(dest)]
        .take()
        .ok_or_else(|| NavError::NoPath(origin.0.clone(), dest.0.clone()))?;
    Ok(RouteResult {
        segments: label
            .path
            .iter()
            .map(|&i| graph.segments()[i].id.clone())
            .collect(),
        length: label.length,
        eta: label.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomap::load_map;

    #[test]
    fn forced_path() {
        let g = load_map("node a 0 0\nnode b 500 0\nnode c 1500 0\nsegment x a b urban\nsegment y b c arterial\n")
            .unwrap();
        let r = fastest_route(&g, &"a".into(), &"c".into(), |i| {
            g.segments()[i].initial_baseline_kph
        })
        .unwrap();
        assert_eq!(r.route_id(), "x>y");
        let expected = 500.0 * 3.6 / 50.0 + 1000.0 * 3.6 / 70.0;
        assert!((r.eta - expected).abs() < 1e-9);
        assert_eq!(r.length, 1500.0);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // two equal-time paths a->b->d and a->c->d
        let g = load_map(
            "node a 0 0\nnode b 100 100\nnode c 100 -100\nnode d 200 0\n\
             segment q a c urban\nsegment r c d urban\nsegment p a b urban\nsegment z b d urban\n",
        )
        .unwrap();
        let r = fastest_route(&g, &"a".into(), &"d".into(), |_| 50.0).unwrap();
        assert_eq!(r.route_id(), "p>z");
    }

    #[test]
    fn errors() {
        let g = load_map("node a 0 0\nnode b 1 0\nnode c 5 5\nsegment s a b urban\n").unwrap();
        let speed = |_| 50.0;
        assert!(matches!(
            fastest_route(&g, &"a".into(), &"c".into(), speed),
            Err(NavError::NoPath(..))
        ));
        assert!(matches!(
            fastest_route(&g, &"a".into(), &"a".into(), speed),
            Err(NavError::SameOriginDest(_))
        ));
        assert!(matches!(
            fastest_route(&g, &"a".into(), &"zz".into(), speed),
            Err(NavError::UnknownNode(_))
        ));
    }
}
