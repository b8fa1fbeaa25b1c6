use proptest::prelude::*;
use regfrac::funcexpr::{BinOp, Func};
use regfrac::{Domain, Expr, Point};

fn literal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-50i32..50).prop_map(|k| k as f64 * 0.25),
        -1.0e3..1.0e3f64,
        (1.0e-8..1.0e-3f64),
    ]
}

/// ASTs in the canonical form produced by the parser: a unary minus never
/// wraps a literal directly.
fn ast() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Num),
        Just(Expr::X),
        Just(Expr::Y),
        Just(Expr::Pi),
    ];
    leaf.prop_recursive(5, 64, 2, |inner| {
        let unary = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Abs),
            Just(Func::Sqrt),
        ];
        let binary = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        prop_oneof![
            inner.clone().prop_map(|e| match e {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            }),
            (binary, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
            (unary, inner.clone()).prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (prop_oneof![Just(Func::Pow), Just(Func::PowPlus), Just(Func::Rho)], inner.clone(), inner)
                .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
        ]
    })
}

fn depth(e: &Expr) -> usize {
    match e {
        Expr::Num(_) | Expr::X | Expr::Y | Expr::Pi => 1,
        Expr::Neg(a) => 1 + depth(a),
        Expr::Bin(_, l, r) => 1 + depth(l).max(depth(r)),
        Expr::Call(_, args) => 1 + args.iter().map(depth).max().unwrap_or(0),
    }
}

/// Evaluates the source text directly while parsing it; `None` on any
/// domain error or non-finite intermediate.
struct Reference<'a> {
    s: &'a [u8],
    i: usize,
    p: Point,
    domain: &'a Domain,
}

impl Reference<'_> {
    fn eval(src: &str, p: Point, domain: &Domain) -> Option<f64> {
        let mut r = Reference { s: src.as_bytes(), i: 0, p, domain };
        let v = r.sum()?;
        r.ws();
        assert_eq!(r.i, r.s.len(), "reference evaluator left input in {src}");
        Some(v)
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i] == b' ' {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.i < self.s.len() && self.s[self.i] == c {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn fin(v: f64) -> Option<f64> {
        v.is_finite().then_some(v)
    }

    fn sum(&mut self) -> Option<f64> {
        let mut a = self.product();
        loop {
            if self.eat(b'+') {
                let b = self.product();
                a = a.zip(b).and_then(|(a, b)| Self::fin(a + b));
            } else if self.eat(b'-') {
                let b = self.product();
                a = a.zip(b).and_then(|(a, b)| Self::fin(a - b));
            } else {
                return a;
            }
        }
    }

    fn product(&mut self) -> Option<f64> {
        let mut a = self.unary();
        loop {
            if self.eat(b'*') {
                let b = self.unary();
                a = a.zip(b).and_then(|(a, b)| Self::fin(a * b));
            } else if self.eat(b'/') {
                let b = self.unary();
                a = a.zip(b).and_then(|(a, b)| if b == 0.0 { None } else { Self::fin(a / b) });
            } else {
                return a;
            }
        }
    }

    fn unary(&mut self) -> Option<f64> {
        if self.eat(b'-') {
            self.unary().map(|v| -v)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Option<f64> {
        let b = self.atom();
        if self.eat(b'^') {
            let e = self.unary();
            b.zip(e).and_then(|(b, e)| Self::fin(b.powf(e)))
        } else {
            b
        }
    }

    fn atom(&mut self) -> Option<f64> {
        self.ws();
        let c = self.s[self.i];
        if c == b'(' {
            self.i += 1;
            let v = self.sum();
            assert!(self.eat(b')'));
            return v;
        }
        let start = self.i;
        if c.is_ascii_digit() || c == b'.' {
            while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                self.i += 1;
            }
            let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
            return Some(text.parse().unwrap());
        }
        while self.i < self.s.len() && self.s[self.i].is_ascii_alphabetic() {
            self.i += 1;
        }
        let name = std::str::from_utf8(&self.s[start..self.i]).unwrap().to_string();
        match name.as_str() {
            "x" => return Some(self.p.x),
            "y" => return Some(self.p.y),
            "pi" => return Some(std::f64::consts::PI),
            _ => {}
        }
        assert!(self.eat(b'('));
        let a = self.sum();
        let b = if self.eat(b',') { Some(self.sum()) } else { None };
        assert!(self.eat(b')'));
        let a = a?;
        let v = match (name.as_str(), b) {
            ("sin", None) => a.sin(),
            ("cos", None) => a.cos(),
            ("exp", None) => a.exp(),
            ("log", None) if a > 0.0 => a.ln(),
            ("sqrt", None) if a >= 0.0 => a.sqrt(),
            ("abs", None) => a.abs(),
            ("pow", Some(b)) => a.powf(b?),
            ("powplus", Some(b)) => a.max(0.0).powf(b?),
            ("rho", Some(b)) => self.domain.rho(Point::new(a, b?)),
            _ => return None,
        };
        Self::fin(v)
    }
}

fn interior_points() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0..0.999f64, 0.0..std::f64::consts::TAU), 20)
        .prop_map(|v| v.into_iter().map(|(r, t)| Point::new(r * t.cos(), r * t.sin())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(e in ast()) {
        prop_assert!(depth(&e) <= 6);
        let printed = e.to_string();
        let back = Expr::parse(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn evaluator_matches_reference(e in ast(), pts in interior_points()) {
        let disk = Domain::disk(Point::new(0.0, 0.0), 1.0).unwrap();
        let printed = e.to_string();
        for p in pts {
            let got = e.eval(p, &disk).ok();
            let want = Reference::eval(&printed, p, &disk);
            match (got, want) {
                (Some(a), Some(b)) => prop_assert!(
                    (a - b).abs() <= 1e-14 * b.abs().max(f64::MIN_POSITIVE),
                    "{} at {:?}: {} vs {}", printed, p, a, b
                ),
                (None, None) => {}
                (a, b) => prop_assert!(false, "{} at {:?}: {:?} vs {:?}", printed, p, a, b),
            }
        }
    }
}

#[test]
fn rho_matches_domain_distance() {
    let line = Domain::interval(-1.0, 2.0).unwrap();
    let e = Expr::parse("rho(x)").unwrap();
    for k in 0..=30 {
        let x = -1.0 + 3.0 * k as f64 / 30.0;
        let p = Point::on_line(x);
        assert_eq!(e.eval(p, &line).unwrap(), line.rho(p));
    }
    let disk = Domain::disk(Point::new(0.5, -0.25), 2.0).unwrap();
    let e = Expr::parse("rho(x, y)").unwrap();
    for k in 0..20 {
        let t = k as f64 * 0.3;
        let p = Point::new(0.5 + 1.5 * t.cos() * (k as f64 / 20.0), -0.25 + 1.5 * t.sin());
        assert_eq!(e.eval(p, &disk).unwrap(), disk.rho(p));
    }
}
