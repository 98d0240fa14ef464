//! Region-graph layouts: rectangular regions joined by doors, with hiding
//! spots and exits as positioned interest points.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

const GEOM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point { x: a[0], y: a[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Move toward `target` by at most `step`; returns the new point and
    /// whether the target was reached.
    pub fn step_toward(self, target: Point, step: f64) -> (Point, bool) {
        let d = self.dist(target);
        if d <= step {
            (target, true)
        } else {
            let f = step / d;
            (
                Point::new(self.x + (target.x - self.x) * f, self.y + (target.y - self.y) * f),
                false,
            )
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.1}, {:.1})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for Rect {
    fn from(a: [f64; 4]) -> Self {
        Rect { x: a[0], y: a[1], w: a[2], h: a[3] }
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x - GEOM_TOL
            && p.x <= self.x + self.w + GEOM_TOL
            && p.y >= self.y - GEOM_TOL
            && p.y <= self.y + self.h + GEOM_TOL
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Clamp into the rectangle shrunk by `margin` on every side (or its
    /// center line when the rectangle is thinner than twice the margin).
    pub fn clamp(&self, p: Point, margin: f64) -> Point {
        let mx = margin.min(self.w / 2.0);
        let my = margin.min(self.h / 2.0);
        Point::new(
            p.x.clamp(self.x + mx, self.x + self.w - mx),
            p.y.clamp(self.y + my, self.y + self.h - my),
        )
    }

    /// Unit vector pointing into the rectangle from a point on its boundary.
    fn inward_normal(&self, p: Point) -> (f64, f64) {
        let candidates = [
            ((p.x - self.x).abs(), (1.0, 0.0)),
            ((p.x - (self.x + self.w)).abs(), (-1.0, 0.0)),
            ((p.y - self.y).abs(), (0.0, 1.0)),
            ((p.y - (self.y + self.h)).abs(), (0.0, -1.0)),
        ];
        candidates
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal))
            .map(|c| c.1)
            .unwrap_or((0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Classroom,
    Lounge,
    Corridor,
    Cafeteria,
    Kitchen,
    Bathroom,
    Entrance,
    Yard,
    Office,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub id: String,
    pub pos: Point,
    pub descriptor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub id: String,
    pub kind: RegionKind,
    pub rect: Rect,
    #[serde(default)]
    pub hiding_spots: Vec<InterestPoint>,
    #[serde(default)]
    pub exits: Vec<InterestPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoorDoc {
    pub a: String,
    pub b: String,
    pub pos: Point,
}

/// The on-disk layout schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
    pub regions: Vec<RegionDoc>,
    #[serde(default)]
    pub doors: Vec<DoorDoc>,
    #[serde(default)]
    pub patrol_route: Vec<String>,
    #[serde(default = "default_entry_time")]
    pub shooter_entry_time_s: f64,
}

fn default_entry_time() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Door {
    pub a: usize,
    pub b: usize,
    pub pos: Point,
}

impl Door {
    pub fn other(&self, r: usize) -> usize {
        if self.a == r {
            self.b
        } else {
            self.a
        }
    }
}

/// A hiding spot or exit resolved to its owning region.
#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub id: String,
    pub region: usize,
    pub pos: Point,
    pub descriptor: String,
}

/// Validated, indexed layout. Immutable after loading.
#[derive(Debug, Clone)]
pub struct Layout {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub regions: Vec<RegionDoc>,
    pub doors: Vec<Door>,
    pub spots: Vec<Poi>,
    pub exits: Vec<Poi>,
    pub patrol_route: Vec<usize>,
    pub shooter_entry_time_s: f64,
    index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
    dist: Vec<Vec<f64>>,
    next: Vec<Vec<Option<usize>>>,
    spots_by_region: Vec<Vec<usize>>,
    exits_by_region: Vec<Vec<usize>>,
    doors_by_region: Vec<Vec<usize>>,
    door_dist: Vec<Vec<f64>>,
    door_next: Vec<Vec<Option<usize>>>,
}

/// A walking route through doors, from a point to a point or region.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub doors: Vec<usize>,
    /// Regions entered in order, starting with the origin region.
    pub regions: Vec<usize>,
    pub length: f64,
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl Layout {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LayoutDocument =
            serde_json::from_str(text).map_err(|e| Error::Layout(format!("parse error: {e}")))?;
        Self::from_document(doc)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn school() -> Self {
        Self::from_json(include_str!("../data/school.json")).expect("bundled school layout is valid")
    }

    pub fn office() -> Self {
        Self::from_json(include_str!("../data/office.json")).expect("bundled office layout is valid")
    }

    /// Bundled layout by name, or a path to a layout document.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "school" | "school.json" => Ok(Self::school()),
            "office" | "office.json" => Ok(Self::office()),
            path => Self::load(std::path::Path::new(path)),
        }
    }

    pub fn from_document(doc: LayoutDocument) -> Result<Self> {
        if doc.regions.is_empty() {
            return Err(Error::Layout("no regions".into()));
        }
        let mut index = BTreeMap::new();
        for (i, r) in doc.regions.iter().enumerate() {
            if r.id.trim().is_empty() {
                return Err(Error::Layout(format!("region #{i} has an empty id")));
            }
            if !(r.rect.w > 0.0 && r.rect.h > 0.0) {
                return Err(Error::Layout(format!("region {} has a degenerate extent", r.id)));
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::Layout(format!("duplicate region id {}", r.id)));
            }
        }

        let mut poi_ids = BTreeSet::new();
        let mut spots = Vec::new();
        let mut exits = Vec::new();
        let mut spots_by_region = vec![Vec::new(); doc.regions.len()];
        let mut exits_by_region = vec![Vec::new(); doc.regions.len()];
        for (ri, r) in doc.regions.iter().enumerate() {
            for (list, out, by_region, what) in [
                (&r.hiding_spots, &mut spots, &mut spots_by_region, "hiding spot"),
                (&r.exits, &mut exits, &mut exits_by_region, "exit"),
            ] {
                for p in list {
                    if !r.rect.contains(p.pos) {
                        return Err(Error::Layout(format!(
                            "interest point outside region: {what} {} at {} not inside {}",
                            p.id, p.pos, r.id
                        )));
                    }
                    if p.descriptor.trim().is_empty() {
                        return Err(Error::Layout(format!("{what} {} has an empty descriptor", p.id)));
                    }
                    if index.contains_key(&p.id) || !poi_ids.insert(p.id.clone()) {
                        return Err(Error::Layout(format!("duplicate interest point id {}", p.id)));
                    }
                    by_region[ri].push(out.len());
                    out.push(Poi {
                        id: p.id.clone(),
                        region: ri,
                        pos: p.pos,
                        descriptor: p.descriptor.clone(),
                    });
                }
            }
        }
        if exits.is_empty() {
            return Err(Error::Layout("layout has no exits".into()));
        }

        let mut doors = Vec::new();
        let mut adjacency = vec![Vec::new(); doc.regions.len()];
        for d in &doc.doors {
            let (Some(&a), Some(&b)) = (index.get(&d.a), index.get(&d.b)) else {
                return Err(Error::Layout(format!("dangling door {} - {}", d.a, d.b)));
            };
            if a == b {
                return Err(Error::Layout(format!("door joins {} to itself", d.a)));
            }
            for r in [a, b] {
                if !doc.regions[r].rect.contains(d.pos) {
                    return Err(Error::Layout(format!(
                        "door {} - {} at {} is not on the boundary of {}",
                        d.a, d.b, d.pos, doc.regions[r].id
                    )));
                }
            }
            adjacency[a].push((b, doors.len()));
            adjacency[b].push((a, doors.len()));
            doors.push(Door { a, b, pos: d.pos });
        }
        for adj in adjacency.iter_mut() {
            adj.sort_by_key(|(n, _)| *n);
        }

        let patrol_route = doc
            .patrol_route
            .iter()
            .map(|id| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Layout(format!("patrol route references unknown region {id}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let (width, height) = match doc.bounds {
            Some([w, h]) => (w, h),
            None => doc.regions.iter().fold((0.0f64, 0.0f64), |(w, h), r| {
                (w.max(r.rect.x + r.rect.w), h.max(r.rect.y + r.rect.h))
            }),
        };

        let mut layout = Layout {
            name: doc.name,
            width,
            height,
            regions: doc.regions,
            doors,
            spots,
            exits,
            patrol_route,
            shooter_entry_time_s: doc.shooter_entry_time_s,
            index,
            adjacency,
            dist: Vec::new(),
            next: Vec::new(),
            spots_by_region,
            exits_by_region,
            doors_by_region: Vec::new(),
            door_dist: Vec::new(),
            door_next: Vec::new(),
        };
        layout.compute_routes();
        layout.compute_door_graph();
        if let Some(r) = (0..layout.regions.len()).find(|&r| !layout.dist[0][r].is_finite()) {
            return Err(Error::Layout(format!(
                "disconnected graph: {} unreachable from {}",
                layout.regions[r].id, layout.regions[0].id
            )));
        }
        Ok(layout)
    }

    /// All-pairs shortest walking distances between doors; two doors are
    /// linked when they open onto a common region.
    fn compute_door_graph(&mut self) {
        let n = self.doors.len();
        let mut by_region = vec![Vec::new(); self.regions.len()];
        for (i, d) in self.doors.iter().enumerate() {
            by_region[d.a].push(i);
            by_region[d.b].push(i);
        }
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        let mut next = vec![vec![None; n]; n];
        for i in 0..n {
            dist[i][i] = 0.0;
            next[i][i] = Some(i);
        }
        for doors in &by_region {
            for &i in doors {
                for &j in doors {
                    if i != j {
                        let w = self.doors[i].pos.dist(self.doors[j].pos);
                        if w < dist[i][j] {
                            dist[i][j] = w;
                            next[i][j] = Some(j);
                        }
                    }
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] - 1e-12 {
                        dist[i][j] = via;
                        next[i][j] = next[i][k];
                    }
                }
            }
        }
        self.doors_by_region = by_region;
        self.door_dist = dist;
        self.door_next = next;
    }

    /// Shortest walking route from `p` in region `from` to `q` in region
    /// `to`, or to the nearest door of `to` when `q` is `None`. A door under
    /// the walker's feet is only taken when strictly better, so a walker that
    /// just crossed it does not turn back on a tie.
    pub fn route(&self, from: usize, p: Point, to: usize, q: Option<Point>) -> Route {
        if from == to {
            return Route { doors: Vec::new(), regions: vec![from], length: q.map_or(0.0, |q| p.dist(q)) };
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for &a in &self.doors_by_region[from] {
            let lead = p.dist(self.doors[a].pos);
            let penalty = if lead < 1e-9 { 1e-6 } else { 0.0 };
            for &b in &self.doors_by_region[to] {
                let tail = q.map_or(0.0, |q| self.doors[b].pos.dist(q));
                let cost = lead + self.door_dist[a][b] + tail + penalty;
                if best.is_none_or(|(c, _, _)| cost < c - 1e-12) {
                    best = Some((cost, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else {
            return Route { doors: Vec::new(), regions: vec![from], length: f64::INFINITY };
        };
        let mut doors = vec![a];
        let mut cur = a;
        while cur != b {
            match self.door_next[cur][b] {
                Some(n) => {
                    doors.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        let mut regions = vec![from];
        let mut region = from;
        let mut at = p;
        let mut length = 0.0;
        for &d in &doors {
            let door = &self.doors[d];
            length += at.dist(door.pos);
            at = door.pos;
            if door.a == region || door.b == region {
                region = door.other(region);
                regions.push(region);
            }
        }
        if let Some(q) = q {
            length += at.dist(q);
        }
        Route { doors, regions, length }
    }

    /// First door on the walking route, if `to` differs from `from`.
    pub fn first_door(&self, from: usize, p: Point, to: usize, q: Option<Point>) -> Option<usize> {
        self.route(from, p, to, q).doors.first().copied()
    }

    /// All-pairs region routing by Dijkstra, edge cost center→door→center.
    fn compute_routes(&mut self) {
        let n = self.regions.len();
        self.dist = vec![vec![f64::INFINITY; n]; n];
        self.next = vec![vec![None; n]; n];
        for target in 0..n {
            // Search backwards from `target` so `next[src][target]` is the first hop.
            let dist = &mut self.dist;
            let next = &mut self.next;
            dist[target][target] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Frontier(0.0, target));
            while let Some(Frontier(d, r)) = heap.pop() {
                if d > dist[r][target] {
                    continue;
                }
                for &(nb, door) in &self.adjacency[r] {
                    let pos = self.doors[door].pos;
                    let w = self.regions[nb].rect.center().dist(pos) + pos.dist(self.regions[r].rect.center());
                    let nd = d + w;
                    if nd < dist[nb][target] - 1e-12 {
                        dist[nb][target] = nd;
                        next[nb][target] = Some(door);
                        heap.push(Frontier(nd, nb));
                    }
                }
            }
        }
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn region_id(&self, r: usize) -> &str {
        &self.regions[r].id
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Neighbors of `r` as (region, door) pairs, sorted by region index.
    pub fn neighbors(&self, r: usize) -> &[(usize, usize)] {
        &self.adjacency[r]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].iter().any(|(n, _)| *n == b)
    }

    pub fn spots_in(&self, r: usize) -> &[usize] {
        &self.spots_by_region[r]
    }

    pub fn exits_in(&self, r: usize) -> &[usize] {
        &self.exits_by_region[r]
    }

    pub fn spot_index(&self, id: &str) -> Option<usize> {
        self.spots.iter().position(|s| s.id == id)
    }

    pub fn exit_index(&self, id: &str) -> Option<usize> {
        self.exits.iter().position(|s| s.id == id)
    }

    /// Door used for the first hop from `from` toward `to`.
    pub fn next_door(&self, from: usize, to: usize) -> Option<usize> {
        self.next[from][to]
    }

    /// Center-to-center routing cost between regions.
    pub fn region_distance(&self, from: usize, to: usize) -> f64 {
        self.dist[from][to]
    }

    /// Hop count between regions along the routing tree.
    pub fn hops(&self, from: usize, to: usize) -> usize {
        self.region_path(from, to).len() - 1
    }

    /// Regions visited from `from` to `to`, both inclusive.
    pub fn region_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            match self.next[cur][to] {
                Some(door) => {
                    cur = self.doors[door].other(cur);
                    path.push(cur);
                }
                None => break,
            }
        }
        path
    }

    /// Door waypoints from region `from` to region `to`.
    pub fn door_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut doors = Vec::new();
        let mut cur = from;
        while cur != to {
            match self.next[cur][to] {
                Some(door) => {
                    doors.push(door);
                    cur = self.doors[door].other(cur);
                }
                None => break,
            }
        }
        doors
    }

    /// Walking distance from `p` in `from` to `q` in `to` through doors.
    pub fn path_length(&self, from: usize, p: Point, to: usize, q: Point) -> f64 {
        self.route(from, p, to, Some(q)).length
    }

    /// Regions whose shortest hop count from `r` is at most `k`.
    pub fn within_hops(&self, r: usize, k: usize) -> Vec<usize> {
        let mut seen = vec![usize::MAX; self.regions.len()];
        let mut frontier = vec![r];
        seen[r] = 0;
        for depth in 1..=k {
            let mut next = Vec::new();
            for &f in &frontier {
                for &(nb, _) in &self.adjacency[f] {
                    if seen[nb] == usize::MAX {
                        seen[nb] = depth;
                        next.push(nb);
                    }
                }
            }
            frontier = next;
        }
        (0..self.regions.len()).filter(|&i| seen[i] != usize::MAX).collect()
    }

    /// A seeded point a couple of meters inside `region` past `door`.
    pub fn entry_point(&self, door: usize, region: usize, rng: &mut SimRng) -> Point {
        let rect = &self.regions[region].rect;
        let d = self.doors[door].pos;
        let (nx, ny) = rect.inward_normal(d);
        let depth = rng.range(2.0, 3.0);
        let lateral = rng.range(-1.0, 1.0);
        let p = Point::new(d.x + nx * depth - ny * lateral, d.y + ny * depth + nx * lateral);
        rect.clamp(p, 0.3)
    }

    /// Uniform seeded point inside a region, away from its walls.
    pub fn random_point(&self, region: usize, rng: &mut SimRng) -> Point {
        let r = &self.regions[region].rect;
        let p = Point::new(rng.range(r.x, r.x + r.w), rng.range(r.y, r.y + r.h));
        r.clamp(p, 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> LayoutDocument {
        serde_json::from_str(
            r#"{"regions":[{"id":"hall","kind":"corridor","rect":[0,0,10,4],
                "exits":[{"id":"exit_a","pos":[9,2],"descriptor":"front door"}]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn school_counts() {
        let s = Layout::school();
        assert_eq!(s.regions.len(), 27);
        assert_eq!(s.spots.len(), 64);
        assert_eq!(s.exits.len(), 4);
        assert_eq!((s.width, s.height), (72.0, 48.0));
    }

    #[test]
    fn school_kind_census() {
        let s = Layout::school();
        let count = |k: RegionKind| s.regions.iter().filter(|r| r.kind == k).count();
        assert_eq!(count(RegionKind::Classroom), 8);
        assert_eq!(count(RegionKind::Lounge), 1);
        assert_eq!(count(RegionKind::Corridor), 5);
        assert_eq!(count(RegionKind::Cafeteria), 1);
        assert_eq!(count(RegionKind::Kitchen), 1);
        assert_eq!(count(RegionKind::Bathroom), 2);
        assert_eq!(count(RegionKind::Entrance), 4);
        assert_eq!(count(RegionKind::Yard), 5);
    }

    #[test]
    fn minimal_layout_is_valid() {
        let l = Layout::from_document(minimal()).unwrap();
        assert_eq!(l.regions.len(), 1);
        assert_eq!(l.exits.len(), 1);
    }

    #[test]
    fn dangling_door() {
        let mut doc = minimal();
        doc.doors.push(DoorDoc { a: "hall".into(), b: "attic".into(), pos: Point::new(0.0, 0.0) });
        let err = Layout::from_document(doc).unwrap_err();
        assert!(err.to_string().contains("dangling door"), "{err}");
    }

    #[test]
    fn disconnected_and_outside_points() {
        let mut doc = minimal();
        doc.regions.push(RegionDoc {
            id: "shed".into(),
            kind: RegionKind::Yard,
            rect: Rect::from([20.0, 0.0, 4.0, 4.0]),
            hiding_spots: vec![],
            exits: vec![],
        });
        let err = Layout::from_document(doc.clone()).unwrap_err();
        assert!(err.to_string().contains("disconnected graph"), "{err}");

        let mut doc = minimal();
        doc.regions[0].hiding_spots.push(InterestPoint {
            id: "s".into(),
            pos: Point::new(50.0, 1.0),
            descriptor: "x".into(),
        });
        let err = Layout::from_document(doc).unwrap_err();
        assert!(err.to_string().contains("interest point outside region"), "{err}");
    }

    #[test]
    fn routing_is_consistent() {
        let s = Layout::school();
        let c4 = s.region_index("classroom_4").unwrap();
        let ny = s.region_index("north_yard").unwrap();
        let path: Vec<_> = s.region_path(c4, ny).iter().map(|r| s.region_id(*r).to_string()).collect();
        assert_eq!(path, ["classroom_4", "hallway2", "hallway5", "entrance_north", "north_yard"]);
        for a in 0..s.region_count() {
            for b in 0..s.region_count() {
                let p = s.region_path(a, b);
                assert_eq!(*p.last().unwrap(), b);
                for w in p.windows(2) {
                    assert!(s.is_adjacent(w[0], w[1]));
                }
            }
        }
    }

    #[test]
    fn entry_points_stay_inside() {
        let s = Layout::school();
        let mut rng = SimRng::new(4);
        for (di, d) in s.doors.iter().enumerate() {
            for r in [d.a, d.b] {
                for _ in 0..5 {
                    let p = s.entry_point(di, r, &mut rng);
                    assert!(s.regions[r].rect.contains(p));
                    assert!(p.dist(d.pos) < 4.0);
                }
            }
        }
    }

    #[test]
    fn office_is_distinct() {
        let o = Layout::office();
        assert_eq!(o.name, "office");
        assert!(o.regions.iter().any(|r| r.kind == RegionKind::Office));
        assert_ne!(o.regions.len(), 27);
    }
}
