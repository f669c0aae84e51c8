use serde::{Deserialize, Serialize};

use crate::error::{Result, Violation};

pub type Rgb = [f32; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub t: f32,
    pub rgb: Rgb,
}

/// Piecewise-linear colour over normalized distance `t` in `[0, 1]`.
/// Starts at `t = 0`, ends at `t = 1` with black: a flare fades out at its
/// radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorCurve {
    pub control_points: Vec<CurvePoint>,
}

impl ColorCurve {
    pub fn new(control_points: Vec<CurvePoint>) -> Result<Self> {
        let c = Self { control_points };
        super::into_result(|out| c.check("", out))?;
        Ok(c)
    }

    /// Straight ramp from `peak` at the center to black at the edge.
    pub fn linear(peak: Rgb) -> Self {
        Self {
            control_points: vec![
                CurvePoint { t: 0.0, rgb: peak },
                CurvePoint {
                    t: 1.0,
                    rgb: [0.0; 3],
                },
            ],
        }
    }

    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        let pts = &self.control_points;
        let cp = format!("{path}.control_points");
        if pts.len() < 2 {
            out.push(Violation::new(cp, "needs at least two control points"));
            return;
        }
        if pts[0].t != 0.0 {
            out.push(Violation::new(format!("{cp}[0].t"), "first t must be 0"));
        }
        let last = pts.len() - 1;
        if pts[last].t != 1.0 {
            out.push(Violation::new(format!("{cp}[{last}].t"), "last t must be 1"));
        }
        if pts[last].rgb != [0.0; 3] {
            out.push(Violation::new(
                format!("{cp}[{last}].rgb"),
                "curve must fade to black at t = 1",
            ));
        }
        for i in 1..pts.len() {
            if !(pts[i].t > pts[i - 1].t) {
                out.push(Violation::new(
                    format!("{cp}[{i}].t"),
                    "t must be strictly increasing",
                ));
            }
        }
        for (i, p) in pts.iter().enumerate() {
            super::rgb_in_unit(&p.rgb, &format!("{cp}[{i}].rgb"), out);
        }
    }

    /// Colour at `t`; clamps below 0, black beyond 1.
    pub fn eval(&self, t: f32) -> Rgb {
        let pts = &self.control_points;
        if t >= 1.0 || pts.is_empty() {
            return [0.0; 3];
        }
        if t <= pts[0].t {
            return pts[0].rgb;
        }
        let i = pts.partition_point(|p| p.t <= t);
        if i >= pts.len() {
            return pts[pts.len() - 1].rgb;
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let f = (t - a.t) / (b.t - a.t);
        [
            a.rgb[0] + (b.rgb[0] - a.rgb[0]) * f,
            a.rgb[1] + (b.rgb[1] - a.rgb[1]) * f,
            a.rgb[2] + (b.rgb[2] - a.rgb[2]) * f,
        ]
    }

    pub fn is_non_increasing(&self) -> bool {
        self.control_points
            .windows(2)
            .all(|w| (0..3).all(|c| w[1].rgb[c] <= w[0].rgb[c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_clamps() {
        let c = ColorCurve::new(vec![
            CurvePoint { t: 0.0, rgb: [1.0, 0.5, 0.0] },
            CurvePoint { t: 0.5, rgb: [0.5, 0.5, 0.5] },
            CurvePoint { t: 1.0, rgb: [0.0; 3] },
        ])
        .unwrap();
        assert_eq!(c.eval(0.0), [1.0, 0.5, 0.0]);
        assert_eq!(c.eval(-1.0), [1.0, 0.5, 0.0]);
        assert_eq!(c.eval(0.25), [0.75, 0.5, 0.25]);
        assert_eq!(c.eval(1.0), [0.0; 3]);
        assert_eq!(c.eval(3.0), [0.0; 3]);
    }

    #[test]
    fn rejects_malformed_curves() {
        let bad = |pts: Vec<CurvePoint>| ColorCurve::new(pts).is_err();
        let p = |t, v| CurvePoint { t, rgb: [v; 3] };
        assert!(bad(vec![p(0.0, 1.0)]));
        assert!(bad(vec![p(0.1, 1.0), p(1.0, 0.0)]));
        assert!(bad(vec![p(0.0, 1.0), p(1.0, 0.2)]));
        assert!(bad(vec![p(0.0, 1.0), p(0.6, 0.5), p(0.4, 0.3), p(1.0, 0.0)]));
        assert!(bad(vec![p(0.0, 1.5), p(1.0, 0.0)]));
        assert!(!bad(vec![p(0.0, 1.0), p(1.0, 0.0)]));
    }
}
