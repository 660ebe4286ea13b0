//! Closed SK terms with inert atoms and generic variables, and a fuel-bounded
//! leftmost weak reducer.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

/// Generic variable. `pure` ones range over atom-free normal forms only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gv {
    pub id: u32,
    pub pure: bool,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sk {
    S,
    K,
    Atom(u32),
    Var(Gv),
    App(Arc<Sk>, Arc<Sk>),
}

const MAX_SIZE: usize = 20_000;
const MAX_DEPTH: usize = 1_500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stuck {
    Fuel(u64),
    Size,
}

impl Sk {
    pub fn app(l: Sk, r: Sk) -> Sk {
        Sk::App(Arc::new(l), Arc::new(r))
    }

    pub fn apps(head: Sk, args: impl IntoIterator<Item = Sk>) -> Sk {
        args.into_iter().fold(head, Sk::app)
    }

    pub fn var(id: u32) -> Sk {
        Sk::Var(Gv { id, pure: false })
    }

    pub fn pure_var(id: u32) -> Sk {
        Sk::Var(Gv { id, pure: true })
    }

    pub fn size(&self) -> usize {
        match self {
            Sk::App(l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    pub fn spine(&self) -> (&Sk, Vec<&Sk>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Sk::App(l, r) = t {
            args.push(&**r);
            t = l;
        }
        args.reverse();
        (t, args)
    }

    pub fn has_atoms(&self) -> bool {
        match self {
            Sk::Atom(_) => true,
            Sk::App(l, r) => l.has_atoms() || r.has_atoms(),
            _ => false,
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Sk::Var(_) => true,
            Sk::App(l, r) => l.has_vars() || r.has_vars(),
            _ => false,
        }
    }

    /// Every instance is atom-free.
    pub fn is_pure(&self) -> bool {
        match self {
            Sk::Atom(_) => false,
            Sk::Var(g) => g.pure,
            Sk::App(l, r) => l.is_pure() && r.is_pure(),
            _ => true,
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<Gv>) {
        match self {
            Sk::Var(g) => {
                out.insert(*g);
            }
            Sk::App(l, r) => {
                l.vars(out);
                r.vars(out);
            }
            _ => {}
        }
    }

    pub fn max_var(&self) -> Option<u32> {
        let mut vs = BTreeSet::new();
        self.vars(&mut vs);
        vs.iter().map(|g| g.id).max()
    }

    /// Some variable sits in head position with at least one argument.
    /// Substituting into such a term can create new redexes.
    pub fn has_head_var_app(&self) -> bool {
        match self {
            Sk::App(..) => {
                let (h, args) = self.spine();
                matches!(h, Sk::Var(_)) || args.iter().any(|a| a.has_head_var_app())
            }
            _ => false,
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(Gv) -> Sk) -> Sk {
        match self {
            Sk::Var(g) => f(*g),
            Sk::App(l, r) => Sk::app(l.map_vars(f), r.map_vars(f)),
            t => t.clone(),
        }
    }

    pub fn shift_vars(&self, by: u32) -> Sk {
        self.map_vars(&mut |g| Sk::Var(Gv { id: g.id + by, pure: g.pure }))
    }

    /// Normal form under leftmost weak reduction, with variables and atoms
    /// inert. `fuel` counts contractions.
    pub fn normalize(&self, fuel: &mut u64) -> Result<Sk, Stuck> {
        let start = *fuel;
        nf(self, fuel, 0).map_err(|e| match e {
            Stuck::Fuel(_) => Stuck::Fuel(start),
            s => s,
        })
    }

    pub fn is_normal(&self) -> bool {
        let (h, args) = self.spine();
        let redex = match h {
            Sk::K => args.len() >= 2,
            Sk::S => args.len() >= 3,
            _ => false,
        };
        !redex && args.iter().all(|a| a.is_normal())
    }
}

fn nf(t: &Sk, fuel: &mut u64, depth: usize) -> Result<Sk, Stuck> {
    if depth > MAX_DEPTH {
        return Err(Stuck::Size);
    }
    // args stored with the first argument last
    let mut stack: Vec<Sk> = Vec::new();
    let mut head = t.clone();
    loop {
        while let Sk::App(l, r) = head {
            stack.push((*r).clone());
            head = (*l).clone();
        }
        match head {
            Sk::K if stack.len() >= 2 => {
                if *fuel == 0 {
                    return Err(Stuck::Fuel(0));
                }
                *fuel -= 1;
                let x = stack.pop().unwrap();
                stack.pop();
                head = x;
            }
            Sk::S if stack.len() >= 3 => {
                if *fuel == 0 {
                    return Err(Stuck::Fuel(0));
                }
                *fuel -= 1;
                let x = stack.pop().unwrap();
                let y = stack.pop().unwrap();
                let z = stack.pop().unwrap();
                stack.push(Sk::app(y, z.clone()));
                stack.push(z);
                head = x;
                if stack.len() > MAX_SIZE {
                    return Err(Stuck::Size);
                }
            }
            _ => break,
        }
    }
    let mut out = head;
    let mut size = 1;
    while let Some(a) = stack.pop() {
        let a = nf(&a, fuel, depth + 1)?;
        size += a.size() + 1;
        if size > MAX_SIZE {
            return Err(Stuck::Size);
        }
        out = Sk::app(out, a);
    }
    Ok(out)
}

impl fmt::Display for Sk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sk::S => write!(f, "S"),
            Sk::K => write!(f, "K"),
            Sk::Atom(n) => write!(f, "o{n}"),
            Sk::Var(g) if g.pure => write!(f, "!{}", g.id),
            Sk::Var(g) => write!(f, "?{}", g.id),
            Sk::App(l, r) => {
                write!(f, "{l} ")?;
                if matches!(**r, Sk::App(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

impl fmt::Debug for Sk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn parse_sk(src: &str) -> Result<Sk, String> {
    let toks = tokenize(src)?;
    let mut pos = 0;
    let t = parse_seq(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(format!("unexpected token at {pos} in {src:?}"));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(Sk),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            'S' => {
                out.push(Tok::Atom(Sk::S));
                i += 1
            }
            'K' => {
                out.push(Tok::Atom(Sk::K));
                i += 1
            }
            'o' | '?' | '!' => {
                let mut j = i + 1;
                while j < cs.len() && cs[j].is_ascii_digit() {
                    j += 1;
                }
                let n: u32 = cs[i + 1..j]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| format!("bad index after {c:?} in {src:?}"))?;
                out.push(Tok::Atom(match c {
                    'o' => Sk::Atom(n),
                    '?' => Sk::var(n),
                    _ => Sk::pure_var(n),
                }));
                i = j;
            }
            _ => return Err(format!("unexpected character {c:?} in {src:?}")),
        }
    }
    Ok(out)
}

fn parse_seq(toks: &[Tok], pos: &mut usize) -> Result<Sk, String> {
    let mut acc: Option<Sk> = None;
    while *pos < toks.len() {
        let t = match &toks[*pos] {
            Tok::Close => break,
            Tok::Open => {
                *pos += 1;
                let t = parse_seq(toks, pos)?;
                if toks.get(*pos) != Some(&Tok::Close) {
                    return Err("unbalanced parentheses".into());
                }
                *pos += 1;
                t
            }
            Tok::Atom(a) => {
                *pos += 1;
                a.clone()
            }
        };
        acc = Some(match acc {
            None => t,
            Some(l) => Sk::app(l, t),
        });
    }
    acc.ok_or_else(|| "empty term".to_string())
}

/// Random normal form with at most `size` leaves. Atoms are drawn from
/// `0..atoms`.
pub fn random_nf<R: Rng>(rng: &mut R, size: usize, atoms: u32) -> Sk {
    let size = size.max(1);
    let choice = if size == 1 {
        rng.gen_range(0..if atoms > 0 { 3 } else { 2 })
    } else {
        rng.gen_range(0..if atoms > 0 { 7 } else { 6 })
    };
    let atom = |rng: &mut R| Sk::Atom(rng.gen_range(0..atoms.max(1)));
    match choice {
        0 => Sk::K,
        1 => Sk::S,
        2 if size == 1 => atom(rng),
        2 | 3 => {
            let head = if choice == 2 { Sk::K } else { Sk::S };
            Sk::app(head, random_nf(rng, size - 1, atoms))
        }
        4 | 5 if size >= 3 => {
            let l = rng.gen_range(1..size - 1);
            Sk::apps(Sk::S, [random_nf(rng, l, atoms), random_nf(rng, size - 1 - l, atoms)])
        }
        4 | 5 => Sk::app(Sk::K, random_nf(rng, size - 1, atoms)),
        _ => Sk::app(atom(rng), random_nf(rng, size - 1, atoms)),
    }
}
