//! Gauss–Legendre rules and a square-shell cubature refined towards the
//! origin, where recurrence integrands blow up.

/// Nodes and weights of the 8-point Gauss–Legendre rule on `[-1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Gauss–Legendre nodes on `[a, b]`.
pub fn gl8(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL8.iter().map(move |&(x, w)| (mid + half * x, half * w))
}

/// Composite 8-point rule with `panels` equal panels on `[a, b]`.
pub fn composite_gl8(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let step = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|k| gl8(a + k as f64 * step, a + (k + 1) as f64 * step))
        .collect()
}

/// Composite rule on `[0, a]` with dyadic panels `[a/2^{k+1}, a/2^k]`
/// down to `h_min`, plus one panel `[0, h_min]`.
pub fn dyadic_gl8(a: f64, h_min: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut h = a;
    while h > h_min {
        out.extend(gl8(0.5 * h, h));
        h *= 0.5;
    }
    out.extend(gl8(0.0, h));
    out
}

/// A weighted node of a planar rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub t: (f64, f64),
    pub weight: f64,
}

fn square_nodes(x0: f64, y0: f64, side: f64, out: &mut Vec<Node>) {
    for (x, wx) in gl8(x0, x0 + side) {
        for (y, wy) in gl8(y0, y0 + side) {
            out.push(Node {
                t: (x, y),
                weight: wx * wy,
            });
        }
    }
}

/// Cubature on `[-a, a]²`: the ring `[-h, h]² \ [-h/2, h/2]²` is split into
/// twelve squares for `h = a, a/2, …` until `h/2 ≤ h_min`, then the inner
/// square is integrated directly. No node sits on a coordinate axis.
pub fn origin_shells(a: f64, h_min: f64) -> Vec<Node> {
    let mut out = Vec::new();
    let mut h = a;
    loop {
        let side = 0.5 * h;
        for i in 0..4 {
            for j in 0..4 {
                if (1..=2).contains(&i) && (1..=2).contains(&j) {
                    continue;
                }
                square_nodes(-h + i as f64 * side, -h + j as f64 * side, side, &mut out);
            }
        }
        h *= 0.5;
        if h <= h_min {
            break;
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            square_nodes(-h + i as f64 * h, -h + j as f64 * h, h, &mut out);
        }
    }
    out
}
