//! Planar road network, map file parsing, map matching and route geometry.
//!
//! Coordinates are local meters. Segments are directed; a two-way road is two
//! segment lines in the map file.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Perpendicular distance gate for map matching, meters.
pub const MATCH_GATE_M: f64 = 15.0;
/// Half-angle of the heading cone for map matching, degrees.
pub const MATCH_CONE_DEG: f64 = 90.0;

const LENGTH_EPS: f64 = 1e-6;
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SegmentId {
    fn from(s: &str) -> Self {
        SegmentId(s.to_string())
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, frac: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }
}

/// Compass heading in degrees (0 = +y / north, 90 = +x / east) of the
/// direction from `a` to `b`.
pub fn heading_deg(a: Point, b: Point) -> f64 {
    let deg = (b.x - a.x).atan2(b.y - a.y).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

/// Smallest absolute difference between two headings, in [0, 180].
pub fn heading_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpeedClass {
    CampusLow,
    Urban,
    Arterial,
    Highway,
}

impl SpeedClass {
    /// Initial baseline used when the map does not override it.
    pub fn default_baseline_kph(self) -> f64 {
        match self {
            SpeedClass::CampusLow => 20.0,
            SpeedClass::Urban => 50.0,
            SpeedClass::Arterial => 70.0,
            SpeedClass::Highway => 100.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpeedClass::CampusLow => "campus_low",
            SpeedClass::Urban => "urban",
            SpeedClass::Arterial => "arterial",
            SpeedClass::Highway => "highway",
        }
    }
}

impl FromStr for SpeedClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "campus_low" => Ok(SpeedClass::CampusLow),
            "urban" => Ok(SpeedClass::Urban),
            "arterial" => Ok(SpeedClass::Arterial),
            "highway" => Ok(SpeedClass::Highway),
            other => Err(format!("unknown speed class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: SegmentId,
    pub from: NodeId,
    pub to: NodeId,
    pub via: Vec<Point>,
    pub speed_class: SpeedClass,
    pub initial_baseline_kph: f64,
    /// Full geometry: from-node, via points, to-node.
    pub points: Vec<Point>,
    pub length: f64,
}

impl Segment {
    /// Position and heading at `offset` meters from the segment start.
    /// Offsets outside [0, length] are clamped.
    pub fn point_at(&self, offset: f64) -> (Point, f64) {
        point_along(&self.points, offset)
    }

    /// Heading of the first leg.
    pub fn start_heading(&self) -> f64 {
        heading_deg(self.points[0], self.points[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFix {
    pub segment: SegmentId,
    pub offset: f64,
    pub speed_kph: f64,
    pub t: f64,
    pub session: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: segment {segment} references unknown node {node}")]
    DanglingNode {
        line: usize,
        segment: String,
        node: String,
    },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: segment {segment} has zero length")]
    ZeroLength { line: usize, segment: String },
    #[error("segment list is empty")]
    EmptyRoute,
    #[error("unknown segment {0}")]
    UnknownSegment(String),
    #[error("segments {0} and {1} are not contiguous")]
    NonContiguous(String, String),
}

/// Directed planar road network. Immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    node_index: BTreeMap<NodeId, usize>,
    segment_index: BTreeMap<SegmentId, usize>,
    outgoing: BTreeMap<NodeId, Vec<usize>>,
}

impl RoadGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Segments in file order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn segment(&self, id: &SegmentId) -> Option<&Segment> {
        self.segment_index.get(id).map(|&i| &self.segments[i])
    }

    pub fn segment_idx(&self, id: &SegmentId) -> Option<usize> {
        self.segment_index.get(id).copied()
    }

    /// Indices of segments leaving `node`, ordered by segment id.
    pub fn outgoing(&self, node: &NodeId) -> &[usize] {
        self.outgoing.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Axis-aligned bounding box of all nodes and via points.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.segments.iter().flat_map(|s| s.points.iter()) {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Resolve a list of segment ids, checking contiguity.
    pub fn resolve_route(&self, ids: &[SegmentId]) -> Result<Vec<&Segment>, MapError> {
        if ids.is_empty() {
            return Err(MapError::EmptyRoute);
        }
        let segs = ids
            .iter()
            .map(|id| {
                self.segment(id)
                    .ok_or_else(|| MapError::UnknownSegment(id.0.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for pair in segs.windows(2) {
            if pair[0].to != pair[1].from {
                return Err(MapError::NonContiguous(
                    pair[0].id.0.clone(),
                    pair[1].id.0.clone(),
                ));
            }
        }
        Ok(segs)
    }
}

/// Parse and validate a map file.
pub fn load_map(text: &str) -> Result<RoadGraph, MapError> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_index = BTreeMap::new();
    let mut segments: Vec<Segment> = Vec::new();
    let mut segment_index = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |msg: String| MapError::Parse { line, msg };
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "node" => {
                if toks.len() != 4 {
                    return Err(parse_err(format!(
                        "expected `node <id> <x> <y>`, got {} fields",
                        toks.len()
                    )));
                }
                let id = NodeId(toks[1].to_string());
                let x = parse_f64(toks[2]).map_err(parse_err)?;
                let y = parse_f64(toks[3]).map_err(parse_err)?;
                if node_index.contains_key(&id)
                    || segment_index.contains_key(&SegmentId(id.0.clone()))
                {
                    return Err(MapError::DuplicateId { line, id: id.0 });
                }
                node_index.insert(id.clone(), nodes.len());
                nodes.push(Node {
                    id,
                    pos: Point::new(x, y),
                });
            }
            "segment" => {
                if toks.len() < 5 {
                    return Err(parse_err(
                        "expected `segment <id> <from> <to> <speed_class> [baseline_kph] [via ...]`"
                            .to_string(),
                    ));
                }
                let id = SegmentId(toks[1].to_string());
                if segment_index.contains_key(&id) || node_index.contains_key(&NodeId(id.0.clone()))
                {
                    return Err(MapError::DuplicateId { line, id: id.0 });
                }
                let from = NodeId(toks[2].to_string());
                let to = NodeId(toks[3].to_string());
                let speed_class: SpeedClass = toks[4].parse().map_err(parse_err)?;
                let mut baseline = speed_class.default_baseline_kph();
                let mut via = Vec::new();
                let mut rest = &toks[5..];
                if let Some(tok) = rest.first() {
                    if *tok != "via" {
                        baseline = parse_f64(tok).map_err(parse_err)?;
                        if baseline <= 0.0 {
                            return Err(parse_err(format!("baseline must be > 0, got {baseline}")));
                        }
                        rest = &rest[1..];
                    }
                }
                if let Some(tok) = rest.first() {
                    if *tok != "via" || rest.len() < 2 {
                        return Err(parse_err(format!("unexpected token {tok:?}")));
                    }
                    let joined = rest[1..].join("");
                    for pair in joined.split(';').filter(|p| !p.is_empty()) {
                        let (x, y) = pair
                            .split_once(',')
                            .ok_or_else(|| parse_err(format!("bad via point {pair:?}")))?;
                        via.push(Point::new(
                            parse_f64(x).map_err(parse_err)?,
                            parse_f64(y).map_err(parse_err)?,
                        ));
                    }
                }
                let endpoint = |n: &NodeId| {
                    node_index
                        .get(n)
                        .map(|&k| nodes[k].pos)
                        .ok_or_else(|| MapError::DanglingNode {
                            line,
                            segment: id.0.clone(),
                            node: n.0.clone(),
                        })
                };
                let a = endpoint(&from)?;
                let b = endpoint(&to)?;
                let mut points = Vec::with_capacity(via.len() + 2);
                points.push(a);
                points.extend(via.iter().copied());
                points.push(b);
                let length = polyline_length(&points);
                if length <= LENGTH_EPS {
                    return Err(MapError::ZeroLength {
                        line,
                        segment: id.0,
                    });
                }
                segment_index.insert(id.clone(), segments.len());
                segments.push(Segment {
                    id,
                    from,
                    to,
                    via,
                    speed_class,
                    initial_baseline_kph: baseline,
                    points,
                    length,
                });
            }
            other => return Err(parse_err(format!("unknown record {other:?}"))),
        }
    }

    let mut outgoing: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, s) in segments.iter().enumerate() {
        outgoing.entry(s.from.clone()).or_default().push(i);
    }
    for list in outgoing.values_mut() {
        list.sort_by(|&a, &b| segments[a].id.cmp(&segments[b].id));
    }

    Ok(RoadGraph {
        nodes,
        segments,
        node_index,
        segment_index,
        outgoing,
    })
}

fn parse_f64(tok: &str) -> Result<f64, String> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("invalid number {tok:?}"))
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Position and heading at `offset` along a polyline (clamped to its ends).
pub fn point_along(points: &[Point], offset: f64) -> (Point, f64) {
    debug_assert!(points.len() >= 2);
    let mut remaining = offset.max(0.0);
    for w in points.windows(2) {
        let leg = w[0].distance(w[1]);
        if leg <= 0.0 {
            continue;
        }
        if remaining <= leg {
            return (w[0].lerp(w[1], remaining / leg), heading_deg(w[0], w[1]));
        }
        remaining -= leg;
    }
    // past the end: last non-degenerate leg
    let heading = points
        .windows(2)
        .rev()
        .find(|w| w[0].distance(w[1]) > 0.0)
        .map(|w| heading_deg(w[0], w[1]))
        .unwrap_or(0.0);
    (*points.last().unwrap(), heading)
}

/// Nearest point on a polyline: (distance, offset along, heading of the leg).
fn project(points: &[Point], p: Point) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut start = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let leg = a.distance(b);
        if leg <= 0.0 {
            continue;
        }
        let u =
            (((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (leg * leg)).clamp(0.0, 1.0);
        let q = a.lerp(b, u);
        let d = q.distance(p);
        if d < best.0 {
            best = (d, start + u * leg, heading_deg(a, b));
        }
        start += leg;
    }
    best
}

/// Snap a fix to the nearest co-heading segment within the distance gate.
pub fn match_fix(
    graph: &RoadGraph,
    position: Point,
    heading: f64,
    speed_kph: f64,
    t: f64,
    session: u64,
) -> Option<MatchedFix> {
    let mut best: Option<(f64, usize, f64)> = None;
    for (i, seg) in graph.segments.iter().enumerate() {
        let (dist, offset, leg_heading) = project(&seg.points, position);
        if dist > MATCH_GATE_M || heading_diff(heading, leg_heading) > MATCH_CONE_DEG {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bi, _)) => {
                dist < bd - TIE_EPS
                    || ((dist - bd).abs() <= TIE_EPS && seg.id < graph.segments[bi].id)
            }
        };
        if better {
            best = Some((dist, i, offset));
        }
    }
    best.map(|(_, i, offset)| {
        let seg = &graph.segments[i];
        MatchedFix {
            segment: seg.id.clone(),
            offset: offset.clamp(0.0, seg.length),
            speed_kph,
            t,
            session,
        }
    })
}

/// Concatenated geometry of a contiguous segment list, junctions listed once.
pub fn route_polyline(graph: &RoadGraph, ids: &[SegmentId]) -> Result<Vec<Point>, MapError> {
    let segs = graph.resolve_route(ids)?;
    let mut out: Vec<Point> = Vec::new();
    for seg in segs {
        let skip = usize::from(!out.is_empty());
        out.extend(seg.points.iter().skip(skip).copied());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODE: &str = "node a 0 0\nnode b 1000 0\nsegment s1 a b urban\n";

    fn sample_graph() -> RoadGraph {
        load_map(
            "# two parallel co-heading roads 20 m apart\n\
             node a 0 0\nnode b 100 0\nnode c 0 20\nnode d 100 20\nnode e 200 0\n\
             segment s1 a b urban\nsegment s2 c d urban\nsegment s3 b e arterial 65 via 150,0\n",
        )
        .unwrap()
    }

    #[test]
    fn two_node_map_length() {
        let g = load_map(TWO_NODE).unwrap();
        let s = g.segment(&"s1".into()).unwrap();
        assert_eq!(s.length, 1000.0);
        assert_eq!(s.initial_baseline_kph, 50.0);
    }

    #[test]
    fn unknown_node_is_named() {
        let err = load_map("node a 0 0\nsegment s1 a n9 urban\n").unwrap_err();
        assert!(err.to_string().contains("n9"), "{err}");
        assert!(matches!(err, MapError::DanglingNode { line: 2, .. }));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load_map("node a 0 0\n\nnode b x 0\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 3, .. }), "{err:?}");
        let err = load_map("node a 0 0\nnode b 1 1\nsegment s a b freeway\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 3, .. }));
    }

    #[test]
    fn duplicate_and_zero_length_rejected() {
        let err = load_map("node a 0 0\nnode a 1 1\n").unwrap_err();
        assert_eq!(
            err,
            MapError::DuplicateId {
                line: 2,
                id: "a".into()
            }
        );
        let err = load_map("node a 0 0\nnode b 0 0\nsegment s a b urban\n").unwrap_err();
        assert!(matches!(err, MapError::ZeroLength { .. }));
        let err = load_map(&format!("{TWO_NODE}segment s1 b a urban\n")).unwrap_err();
        assert!(matches!(err, MapError::DuplicateId { line: 4, .. }));
    }

    #[test]
    fn via_points_add_to_length() {
        let g =
            load_map("node a 0 0\nnode b 30 0\nsegment s a b urban 45 via 0,40;30,40\n").unwrap();
        let s = g.segment(&"s".into()).unwrap();
        assert!((s.length - 110.0).abs() < 1e-9);
        assert_eq!(s.initial_baseline_kph, 45.0);
        assert_eq!(s.points.len(), 4);
    }

    #[test]
    fn match_on_midpoint() {
        let g = sample_graph();
        let s3 = g.segment(&"s3".into()).unwrap();
        let (mid, heading) = s3.point_at(s3.length / 2.0);
        let m = match_fix(&g, mid, heading, 30.0, 5.0, 1).unwrap();
        assert_eq!(m.segment, SegmentId::from("s3"));
        assert!((m.offset - s3.length / 2.0).abs() < 1e-9);
    }

    #[test]
    fn off_road_is_no_match() {
        let g = sample_graph();
        assert!(match_fix(&g, Point::new(50.0, 70.0), 90.0, 30.0, 0.0, 1).is_none());
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_id() {
        let g = sample_graph();
        let m = match_fix(&g, Point::new(50.0, 10.0), 90.0, 30.0, 0.0, 1).unwrap();
        assert_eq!(m.segment, SegmentId::from("s1"));
    }

    #[test]
    fn heading_cone_excludes_opposite_direction() {
        let g = sample_graph();
        assert!(match_fix(&g, Point::new(50.0, 0.0), 270.0, 30.0, 0.0, 1).is_none());
    }

    #[test]
    fn polyline_single_and_dedup() {
        let g = sample_graph();
        let p = route_polyline(&g, &["s1".into()]).unwrap();
        assert_eq!(p, g.segment(&"s1".into()).unwrap().points);
        let p = route_polyline(&g, &["s1".into(), "s3".into()]).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p[1], Point::new(100.0, 0.0));
        assert!((polyline_length(&p) - 200.0).abs() < 1e-9);
    }

    #[test]
    fn polyline_rejects_gaps() {
        let g = sample_graph();
        let err = route_polyline(&g, &["s2".into(), "s3".into()]).unwrap_err();
        assert_eq!(err, MapError::NonContiguous("s2".into(), "s3".into()));
        assert!(route_polyline(&g, &[]).is_err());
    }

    #[test]
    fn load_is_pure() {
        assert_eq!(load_map(TWO_NODE).unwrap(), load_map(TWO_NODE).unwrap());
    }

    #[test]
    fn headings() {
        assert_eq!(
            heading_deg(Point::new(0.0, 0.0), Point::new(1.0, 0.0)),
            90.0
        );
        assert_eq!(
            heading_deg(Point::new(0.0, 0.0), Point::new(0.0, -1.0)),
            180.0
        );
        assert_eq!(heading_diff(350.0, 10.0), 20.0);
    }
}
