//! Orientation, in-circle and in-sphere predicates with exact signs.
//!
//! Each predicate first evaluates the determinant in floating point with a
//! forward error bound (the usual "stage A" filter); when the magnitude is
//! below the bound, the determinant is re-evaluated in exact rational
//! arithmetic over the (dyadic) f64 inputs. The returned sign is therefore
//! always exact, even for degenerate inputs.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Exact sign of a predicate determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }

    pub fn is_negative(self) -> bool {
        self == Sign::Negative
    }
}

fn sign_of_rational(x: &BigRational) -> Sign {
    if x.is_zero() {
        Sign::Zero
    } else if x.is_positive() {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

// Shewchuk's half-ulp: f64::EPSILON is 2^-52, the analysis uses 2^-53.
const EPS: f64 = f64::EPSILON / 2.0;
const CCW_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_BOUND: f64 = (10.0 + 96.0 * EPS) * EPS;
const O3D_BOUND: f64 = (7.0 + 56.0 * EPS) * EPS;
const ISP_BOUND: f64 = (16.0 + 224.0 * EPS) * EPS;
const DOT_BOUND: f64 = 8.0 * EPS;

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("coordinates must be finite")
}

/// Counterclockwise test: positive iff `c` lies to the left of the directed
/// line `a -> b`.
pub fn orient2d(a: &[f64], b: &[f64], c: &[f64]) -> Sign {
    let detleft = (a[0] - c[0]) * (b[1] - c[1]);
    let detright = (a[1] - c[1]) * (b[0] - c[0]);
    let det = detleft - detright;
    let detsum = detleft.abs() + detright.abs();
    if det.abs() > CCW_BOUND * detsum {
        return if det > 0.0 { Sign::Positive } else { Sign::Negative };
    }
    orient2d_exact(a, b, c)
}

fn orient2d_exact(a: &[f64], b: &[f64], c: &[f64]) -> Sign {
    let det = (rat(a[0]) - rat(c[0])) * (rat(b[1]) - rat(c[1]))
        - (rat(a[1]) - rat(c[1])) * (rat(b[0]) - rat(c[0]));
    sign_of_rational(&det)
}

/// In-circle test: positive iff `d` lies strictly inside the circle through
/// `a`, `b`, `c` (taken in counterclockwise order; for clockwise input the
/// sign is flipped).
pub fn incircle2d(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Sign {
    let adx = a[0] - d[0];
    let ady = a[1] - d[1];
    let bdx = b[0] - d[0];
    let bdy = b[1] - d[1];
    let cdx = c[0] - d[0];
    let cdy = c[1] - d[1];

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    if det.abs() > ICC_BOUND * permanent {
        return if det > 0.0 { Sign::Positive } else { Sign::Negative };
    }
    incircle2d_exact(a, b, c, d)
}

fn incircle2d_exact(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Sign {
    let col = |p: &[f64]| {
        let x = rat(p[0]) - rat(d[0]);
        let y = rat(p[1]) - rat(d[1]);
        let l = &x * &x + &y * &y;
        (x, y, l)
    };
    let (ax, ay, al) = col(a);
    let (bx, by, bl) = col(b);
    let (cx, cy, cl) = col(c);
    let det = &al * (&bx * &cy - &cx * &by) - &bl * (&ax * &cy - &cx * &ay)
        + &cl * (&ax * &by - &bx * &ay);
    sign_of_rational(&det)
}

/// Orientation in space: sign of `det [a-d; b-d; c-d]`. A simplex
/// `(a, b, c, d)` is called positively oriented when this is positive.
pub fn orient3d(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Sign {
    let adx = a[0] - d[0];
    let ady = a[1] - d[1];
    let adz = a[2] - d[2];
    let bdx = b[0] - d[0];
    let bdy = b[1] - d[1];
    let bdz = b[2] - d[2];
    let cdx = c[0] - d[0];
    let cdy = c[1] - d[1];
    let cdz = c[2] - d[2];

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;

    let det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * adz.abs()
        + (cdxady.abs() + adxcdy.abs()) * bdz.abs()
        + (adxbdy.abs() + bdxady.abs()) * cdz.abs();
    if det.abs() > O3D_BOUND * permanent {
        return if det > 0.0 { Sign::Positive } else { Sign::Negative };
    }
    orient3d_exact(a, b, c, d)
}

fn orient3d_exact(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Sign {
    let diff = |p: &[f64]| {
        [rat(p[0]) - rat(d[0]), rat(p[1]) - rat(d[1]), rat(p[2]) - rat(d[2])]
    };
    let r = diff(a);
    let s = diff(b);
    let t = diff(c);
    let det = &r[2] * (&s[0] * &t[1] - &t[0] * &s[1]) - &s[2] * (&r[0] * &t[1] - &t[0] * &r[1])
        + &t[2] * (&r[0] * &s[1] - &s[0] * &r[1]);
    sign_of_rational(&det)
}

/// In-sphere test: positive iff `e` lies strictly inside the sphere through
/// the positively oriented tetrahedron `(a, b, c, d)`; the sign flips for a
/// negatively oriented one.
pub fn insphere3d(a: &[f64], b: &[f64], c: &[f64], d: &[f64], e: &[f64]) -> Sign {
    let aex = a[0] - e[0];
    let aey = a[1] - e[1];
    let aez = a[2] - e[2];
    let bex = b[0] - e[0];
    let bey = b[1] - e[1];
    let bez = b[2] - e[2];
    let cex = c[0] - e[0];
    let cey = c[1] - e[1];
    let cez = c[2] - e[2];
    let dex = d[0] - e[0];
    let dey = d[1] - e[1];
    let dez = d[2] - e[2];

    let aexbey = aex * bey;
    let bexaey = bex * aey;
    let ab = aexbey - bexaey;
    let bexcey = bex * cey;
    let cexbey = cex * bey;
    let bc = bexcey - cexbey;
    let cexdey = cex * dey;
    let dexcey = dex * cey;
    let cd = cexdey - dexcey;
    let dexaey = dex * aey;
    let aexdey = aex * dey;
    let da = dexaey - aexdey;
    let aexcey = aex * cey;
    let cexaey = cex * aey;
    let ac = aexcey - cexaey;
    let bexdey = bex * dey;
    let dexbey = dex * bey;
    let bd = bexdey - dexbey;

    let abc = aez * bc - bez * ac + cez * ab;
    let bcd = bez * cd - cez * bd + dez * bc;
    let cda = cez * da + dez * ac + aez * cd;
    let dab = dez * ab + aez * bd + bez * da;

    let alift = aex * aex + aey * aey + aez * aez;
    let blift = bex * bex + bey * bey + bez * bez;
    let clift = cex * cex + cey * cey + cez * cez;
    let dlift = dex * dex + dey * dey + dez * dez;

    let det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

    let aezplus = aez.abs();
    let bezplus = bez.abs();
    let cezplus = cez.abs();
    let dezplus = dez.abs();
    let aexbeyplus = aexbey.abs();
    let bexaeyplus = bexaey.abs();
    let bexceyplus = bexcey.abs();
    let cexbeyplus = cexbey.abs();
    let cexdeyplus = cexdey.abs();
    let dexceyplus = dexcey.abs();
    let dexaeyplus = dexaey.abs();
    let aexdeyplus = aexdey.abs();
    let aexceyplus = aexcey.abs();
    let cexaeyplus = cexaey.abs();
    let bexdeyplus = bexdey.abs();
    let dexbeyplus = dexbey.abs();
    let permanent = ((cexdeyplus + dexceyplus) * bezplus
        + (dexbeyplus + bexdeyplus) * cezplus
        + (bexceyplus + cexbeyplus) * dezplus)
        * alift
        + ((dexaeyplus + aexdeyplus) * cezplus
            + (aexceyplus + cexaeyplus) * dezplus
            + (cexdeyplus + dexceyplus) * aezplus)
            * blift
        + ((aexbeyplus + bexaeyplus) * dezplus
            + (bexdeyplus + dexbeyplus) * aezplus
            + (dexaeyplus + aexdeyplus) * bezplus)
            * clift
        + ((bexceyplus + cexbeyplus) * aezplus
            + (cexaeyplus + aexceyplus) * bezplus
            + (aexbeyplus + bexaeyplus) * cezplus)
            * dlift;
    if det.abs() > ISP_BOUND * permanent {
        return if det > 0.0 { Sign::Positive } else { Sign::Negative };
    }
    insphere3d_exact(a, b, c, d, e)
}

// Same expression tree as the float path, term by term, so the exact sign
// is by construction the sign of the filtered determinant.
fn insphere3d_exact(a: &[f64], b: &[f64], c: &[f64], d: &[f64], e: &[f64]) -> Sign {
    let row = |p: &[f64]| {
        [rat(p[0]) - rat(e[0]), rat(p[1]) - rat(e[1]), rat(p[2]) - rat(e[2])]
    };
    let ar = row(a);
    let br = row(b);
    let cr = row(c);
    let dr = row(d);

    let ab = &ar[0] * &br[1] - &br[0] * &ar[1];
    let bc = &br[0] * &cr[1] - &cr[0] * &br[1];
    let cd = &cr[0] * &dr[1] - &dr[0] * &cr[1];
    let da = &dr[0] * &ar[1] - &ar[0] * &dr[1];
    let ac = &ar[0] * &cr[1] - &cr[0] * &ar[1];
    let bd = &br[0] * &dr[1] - &dr[0] * &br[1];

    let abc = &ar[2] * &bc - &br[2] * &ac + &cr[2] * &ab;
    let bcd = &br[2] * &cd - &cr[2] * &bd + &dr[2] * &bc;
    let cda = &cr[2] * &da + &dr[2] * &ac + &ar[2] * &cd;
    let dab = &dr[2] * &ab + &ar[2] * &bd + &br[2] * &da;

    let lift = |r: &[BigRational; 3]| &r[0] * &r[0] + &r[1] * &r[1] + &r[2] * &r[2];
    let alift = lift(&ar);
    let blift = lift(&br);
    let clift = lift(&cr);
    let dlift = lift(&dr);

    let det = (&dlift * &abc - &clift * &dab) + (&blift * &cda - &alift * &bcd);
    sign_of_rational(&det)
}

/// Sign of `<u - w, v - w>`: negative iff `w` lies strictly inside the open
/// ball with diameter `[u, v]`.
pub fn diametral_dot(u: &[f64], v: &[f64], w: &[f64]) -> Sign {
    let mut det = 0.0;
    let mut perm = 0.0;
    for k in 0..u.len() {
        let t = (u[k] - w[k]) * (v[k] - w[k]);
        det += t;
        perm += t.abs();
    }
    if det.abs() > DOT_BOUND * perm {
        return if det > 0.0 { Sign::Positive } else { Sign::Negative };
    }
    let mut exact = BigRational::zero();
    for k in 0..u.len() {
        exact += (rat(u[k]) - rat(w[k])) * (rat(v[k]) - rat(w[k]));
    }
    sign_of_rational(&exact)
}

/// True iff `w` lies strictly inside the open ball with diameter `[u, v]`.
pub fn in_diametral_ball(u: &[f64], v: &[f64], w: &[f64]) -> bool {
    diametral_dot(u, v, w) == Sign::Negative
}

/// Exact squared Euclidean distance as a rational.
pub fn sq_dist_exact(a: &[f64], b: &[f64]) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 0..a.len() {
        let d = rat(a[k]) - rat(b[k]);
        acc += &d * &d;
    }
    acc
}

/// For a point `p` on the plane of the non-degenerate triangle `(a, b, c)`
/// in 3-space: does `p` lie strictly inside the triangle's circumcircle
/// (within that plane)? Decided exactly by solving for the in-plane
/// circumcenter in rational arithmetic.
pub fn facet_circumdisc_contains(a: &[f64], b: &[f64], c: &[f64], p: &[f64]) -> bool {
    let ab: Vec<BigRational> = (0..3).map(|k| rat(b[k]) - rat(a[k])).collect();
    let ac: Vec<BigRational> = (0..3).map(|k| rat(c[k]) - rat(a[k])).collect();
    let dot = |x: &[BigRational], y: &[BigRational]| -> BigRational {
        x.iter().zip(y).map(|(u, v)| u * v).sum()
    };
    let m00 = dot(&ab, &ab);
    let m01 = dot(&ab, &ac);
    let m11 = dot(&ac, &ac);
    let two = BigRational::from_float(2.0).unwrap();
    let r0 = &m00 / &two;
    let r1 = &m11 / &two;
    let det = &m00 * &m11 - &m01 * &m01;
    if det.is_zero() {
        // degenerate facet: no circumdisc
        return false;
    }
    // circumcenter = a + s*ab + t*ac
    let s = (&r0 * &m11 - &m01 * &r1) / &det;
    let t = (&m00 * &r1 - &r0 * &m01) / &det;
    let center: Vec<BigRational> = (0..3)
        .map(|k| rat(a[k]) + &s * &ab[k] + &t * &ac[k])
        .collect();
    let d2 = |q: &[f64]| -> BigRational {
        (0..3)
            .map(|k| {
                let d = rat(q[k]) - &center[k];
                &d * &d
            })
            .sum()
    };
    d2(p) < d2(a)
}

/// 2-D analogue for a point on the supporting line of a segment: strictly
/// inside the segment's circumscribed "disc" on that line means strictly
/// between the endpoints.
pub fn segment_interior_contains(u: &[f64], v: &[f64], p: &[f64]) -> bool {
    in_diametral_ball(u, v, p)
}
