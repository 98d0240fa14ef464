//! Scripted shooter: loops a patrol polyline and fires on same-region civilians.

use serde::{Deserialize, Serialize};

use crate::layout::{Layout, Point};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShooterParams {
    pub speed: f64,
    pub fire_interval: f64,
    pub magazine_size: u32,
    pub reload_time: f64,
    pub hit_probability: f64,
    pub damage: f64,
}

impl Default for ShooterParams {
    fn default() -> Self {
        Self {
            speed: 2.5,
            fire_interval: 0.2,
            magazine_size: 30,
            reload_time: 0.5,
            hit_probability: 0.5,
            damage: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub time_s: f64,
    pub target: usize,
    pub hit: bool,
    pub region: usize,
}

#[derive(Debug, Clone)]
struct Segment {
    from: Point,
    to: Point,
    region: usize,
    start_s: f64,
    len: f64,
}

/// Closed patrol loop through region centers and the doors between them.
#[derive(Debug, Clone)]
pub struct PatrolPath {
    segments: Vec<Segment>,
    origin: Point,
    origin_region: usize,
    length: f64,
}

impl PatrolPath {
    pub fn new(layout: &Layout, route: &[usize]) -> Self {
        let route: Vec<usize> = if route.is_empty() { vec![0] } else { route.to_vec() };
        let center = |r: usize| layout.regions[r].rect.center();
        let origin = center(route[0]);
        let mut segments = Vec::new();
        let mut cur = origin;
        let mut length = 0.0;
        let mut push = |to: Point, region: usize, cur: &mut Point| {
            let len = cur.dist(to);
            if len > 1e-12 {
                segments.push(Segment { from: *cur, to, region, start_s: length, len });
                length += len;
            }
            *cur = to;
        };
        for i in 0..route.len() {
            let (a, b) = (route[i], route[(i + 1) % route.len()]);
            let mut region = a;
            for door in layout.door_path(a, b) {
                push(layout.doors[door].pos, region, &mut cur);
                region = layout.doors[door].other(region);
            }
            push(center(b), b, &mut cur);
        }
        PatrolPath { segments, origin, origin_region: route[0], length }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Position and region at arc length `s` (wrapped onto the loop).
    pub fn at(&self, s: f64) -> (Point, usize) {
        if self.segments.is_empty() || self.length <= 0.0 {
            return (self.origin, self.origin_region);
        }
        let s = s.rem_euclid(self.length);
        let idx = self
            .segments
            .partition_point(|seg| seg.start_s + seg.len <= s)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let f = ((s - seg.start_s) / seg.len).clamp(0.0, 1.0);
        (
            Point::new(seg.from.x + (seg.to.x - seg.from.x) * f, seg.from.y + (seg.to.y - seg.from.y) * f),
            seg.region,
        )
    }

    /// Distance from `p` to the nearest point of the loop.
    pub fn distance_to(&self, p: Point) -> f64 {
        if self.segments.is_empty() {
            return p.dist(self.origin);
        }
        self.segments
            .iter()
            .map(|seg| {
                let (dx, dy) = (seg.to.x - seg.from.x, seg.to.y - seg.from.y);
                let t = (((p.x - seg.from.x) * dx + (p.y - seg.from.y) * dy) / (seg.len * seg.len)).clamp(0.0, 1.0);
                p.dist(Point::new(seg.from.x + dx * t, seg.from.y + dy * t))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShooterState {
    pub position: Point,
    pub current_region: usize,
    pub patrol_route: Vec<usize>,
    pub arc_s: f64,
    pub magazine: u32,
    pub reload_timer: f64,
    pub fire_accum: f64,
    pub active_since: Option<f64>,
    pub shots_fired: u64,
    pub reloads_completed: u64,
}

#[derive(Debug, Clone)]
pub struct Shooter {
    pub params: ShooterParams,
    pub path: PatrolPath,
    pub state: ShooterState,
}

impl Shooter {
    pub fn new(layout: &Layout, params: ShooterParams) -> Self {
        let path = PatrolPath::new(layout, &layout.patrol_route);
        let (position, current_region) = path.at(0.0);
        Shooter {
            params,
            state: ShooterState {
                position,
                current_region,
                patrol_route: layout.patrol_route.clone(),
                arc_s: 0.0,
                magazine: params.magazine_size,
                reload_timer: 0.0,
                fire_accum: params.fire_interval,
                active_since: None,
                shots_fired: 0,
                reloads_completed: 0,
            },
            path,
        }
    }

    pub fn activate(&mut self, now: f64) {
        self.state.active_since = Some(now);
    }

    pub fn is_active(&self) -> bool {
        self.state.active_since.is_some()
    }

    /// Advance along the patrol loop only.
    pub fn advance(&mut self, dt: f64) {
        self.state.arc_s += self.params.speed * dt;
        if self.path.length() > 0.0 {
            self.state.arc_s = self.state.arc_s.rem_euclid(self.path.length());
        }
        let (p, r) = self.path.at(self.state.arc_s);
        self.state.position = p;
        self.state.current_region = r;
    }

    /// Run the fire/reload clock for `dt` seconds starting at `now`.
    /// `visible` lists the civilians in line of sight for this interval.
    pub fn fire(&mut self, visible: &[usize], now: f64, dt: f64, rng: &mut SimRng) -> Vec<Shot> {
        const EPS: f64 = 1e-9;
        let p = self.params;
        let st = &mut self.state;
        let mut shots = Vec::new();
        let mut t = dt;
        while t > EPS {
            if st.reload_timer > 0.0 {
                let used = t.min(st.reload_timer);
                st.reload_timer -= used;
                t -= used;
                if st.reload_timer <= EPS {
                    st.reload_timer = 0.0;
                    st.magazine = p.magazine_size;
                    st.reloads_completed += 1;
                }
                continue;
            }
            if visible.is_empty() {
                st.fire_accum = (st.fire_accum + t).min(p.fire_interval);
                break;
            }
            let need = (p.fire_interval - st.fire_accum).max(0.0);
            if t + EPS < need {
                st.fire_accum += t;
                break;
            }
            t -= need;
            st.fire_accum = 0.0;
            let target = visible[rng.index(visible.len())];
            let hit = rng.chance(p.hit_probability);
            shots.push(Shot {
                time_s: now + dt - t.max(0.0),
                target,
                hit,
                region: st.current_region,
            });
            st.shots_fired += 1;
            st.magazine -= 1;
            if st.magazine == 0 {
                st.reload_timer = p.reload_time;
            }
        }
        shots
    }

    /// One full step: move, then fire at whoever `visible_in` reports for
    /// the region reached.
    pub fn step(
        &mut self,
        dt: f64,
        now: f64,
        visible_in: impl Fn(usize) -> Vec<usize>,
        rng: &mut SimRng,
    ) -> Vec<Shot> {
        self.advance(dt);
        let visible = visible_in(self.state.current_region);
        self.fire(&visible, now, dt, rng)
    }

    /// shots = magazine_size · reloads + (magazine_size − magazine), with a
    /// magazine that is empty while reloading.
    pub fn ammunition_balanced(&self) -> bool {
        let m = self.params.magazine_size as u64;
        self.state.shots_fired == m * self.state.reloads_completed + (m - self.state.magazine as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_room() -> Layout {
        Layout::from_json(
            r#"{"regions":[{"id":"room","kind":"classroom","rect":[0,0,10,10],
                "exits":[{"id":"exit_a","pos":[9,5],"descriptor":"door"}]}],
                "patrol_route":["room"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn six_seconds_of_fire_empties_the_magazine() {
        let mut s = Shooter::new(&one_room(), ShooterParams::default());
        s.activate(0.0);
        let mut rng = SimRng::new(1);
        let shots = s.step(6.0, 0.0, |_| vec![0], &mut rng);
        assert_eq!(shots.len(), 30);
        assert_eq!(s.state.magazine, 0);
        assert!(s.state.reload_timer > 0.0);
        assert!(s.ammunition_balanced());
        for w in shots.windows(2) {
            assert!(w[1].time_s - w[0].time_s >= 0.2 - 1e-9);
        }
    }

    #[test]
    fn no_targets_no_shots() {
        let school = Layout::school();
        let mut s = Shooter::new(&school, ShooterParams::default());
        s.activate(0.0);
        let mut rng = SimRng::new(1);
        let start = s.state.arc_s;
        for i in 0..20 {
            assert!(s.step(0.5, i as f64 * 0.5, |_| vec![], &mut rng).is_empty());
        }
        assert_eq!(s.state.magazine, 30);
        let moved = (s.state.arc_s - start).rem_euclid(s.path.length());
        assert!((moved - 25.0).abs() < 1e-9);
    }

    #[test]
    fn reload_refills() {
        let mut s = Shooter::new(&one_room(), ShooterParams::default());
        let mut rng = SimRng::new(2);
        let mut total = 0;
        for i in 0..40 {
            total += s.step(0.5, i as f64 * 0.5, |_| vec![3, 4], &mut rng).len();
            assert!(s.ammunition_balanced());
        }
        assert_eq!(total as u64, s.state.shots_fired);
        assert!(s.state.reloads_completed >= 2);
    }

    #[test]
    fn patrol_stays_on_polyline_and_loops() {
        let school = Layout::school();
        let path = PatrolPath::new(&school, &school.patrol_route);
        assert!(path.length() > 50.0);
        let (start, r0) = path.at(0.0);
        assert_eq!(school.region_id(r0), "entrance_east");
        let (end, _) = path.at(path.length());
        assert!(start.dist(end) < 1e-9);
        for k in 0..500 {
            let (p, r) = path.at(k as f64 * 0.37);
            assert!(path.distance_to(p) < 1e-6);
            assert!(school.regions[r].rect.contains(p));
        }
    }
}
