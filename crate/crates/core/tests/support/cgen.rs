//! Random C functions paired with the canonical token sequence they must lex to.

use rand::Rng;

#[derive(Debug, Clone)]
enum Part {
    Text(String, Vec<String>),
    Var(usize),
    Func(usize),
}

#[derive(Debug, Clone)]
pub struct CFunction {
    parts: Vec<Part>,
    pub vars: usize,
    pub funcs: usize,
}

/// Names for placeholder identifiers. Both schemes avoid every keyword, type and library name.
#[derive(Debug, Clone, Copy)]
pub enum Naming {
    Plain,
    Renamed(u64),
}

impl Naming {
    pub fn var(self, i: usize) -> String {
        match self {
            Naming::Plain => format!("v{i}"),
            Naming::Renamed(salt) => format!("q{}_{i}", ["zeta", "Buf", "_tmp", "len"][(salt as usize + i) % 4]),
        }
    }

    pub fn func(self, i: usize) -> String {
        match self {
            Naming::Plain => format!("helper{i}"),
            Naming::Renamed(salt) => format!("Xfn_{salt}_{i}"),
        }
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    parts: Vec<Part>,
    vars: usize,
    funcs: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn text(&mut self, s: &str, toks: &[&str]) {
        self.parts.push(Part::Text(s.to_string(), toks.iter().map(|t| t.to_string()).collect()));
    }

    fn op(&mut self, s: &str) {
        self.text(s, &[&format!("op:{s}")]);
    }

    fn punct(&mut self, s: &str) {
        self.text(s, &[&format!("punct:{s}")]);
    }

    fn var(&mut self) {
        let v = self.rng.gen_range(0..self.vars);
        self.parts.push(Part::Var(v));
    }

    fn new_var(&mut self) -> usize {
        self.vars += 1;
        self.vars - 1
    }

    fn number(&mut self) {
        let n: u32 = self.rng.gen_range(0..100_000);
        match self.rng.gen_range(0..5) {
            0 => {
                let hex = format!("{n:x}");
                let mut toks = vec!["num:0x".to_string()];
                toks.extend(hex.chars().map(|c| format!("num:{c}")));
                let upper = self.rng.gen_bool(0.5);
                let text = if upper { format!("0x{}", hex.to_uppercase()) } else { format!("0x{hex}") };
                self.parts.push(Part::Text(text, toks));
            }
            1 => {
                let digits: Vec<String> = n.to_string().chars().map(|c| format!("num:{c}")).collect();
                self.parts.push(Part::Text(format!("{n}u"), digits));
            }
            _ => {
                let digits: Vec<String> = n.to_string().chars().map(|c| format!("num:{c}")).collect();
                self.parts.push(Part::Text(n.to_string(), digits));
            }
        }
    }

    fn literal(&mut self) {
        match self.rng.gen_range(0..6) {
            0 => self.text("3.25", &["float"]),
            1 => self.text("1e-3", &["float"]),
            2 => self.text("0.5f", &["float"]),
            3 => self.text("\"fmt %d, \\\"q\\\"\\n\"", &["str"]),
            4 => self.text("'\\n'", &["charlit"]),
            _ => self.text("'x'", &["charlit"]),
        }
    }

    fn expr(&mut self, depth: usize) {
        if depth == 0 {
            match self.rng.gen_range(0..4) {
                0 => self.number(),
                1 => self.literal(),
                _ => self.var(),
            }
            return;
        }
        match self.rng.gen_range(0..6) {
            0 => {
                self.expr(depth - 1);
                let op = ["+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^", "==", "!=", "<", ">="]
                    [self.rng.gen_range(0..14)];
                self.op(op);
                self.expr(depth - 1);
            }
            1 => {
                self.punct("(");
                self.expr(depth - 1);
                self.punct(")");
            }
            2 => {
                self.var();
                self.punct("[");
                self.expr(depth - 1);
                self.punct("]");
            }
            3 => {
                let api = ["strlen", "atoi", "malloc", "abs"][self.rng.gen_range(0..4)];
                if api == "abs" {
                    let f = self.rng.gen_range(0..=self.funcs);
                    self.funcs = self.funcs.max(f + 1);
                    self.parts.push(Part::Func(f));
                } else {
                    self.text(api, &[&format!("call:{api}")]);
                }
                self.punct("(");
                self.expr(depth - 1);
                self.punct(")");
            }
            4 => {
                self.op("-");
                self.expr(depth - 1);
            }
            _ => self.expr(0),
        }
    }

    fn comment(&mut self) {
        if self.rng.gen_bool(0.3) {
            let c = if self.rng.gen_bool(0.5) { "/* note: x = 1; \"s\" */" } else { "// trailing 42 'c'\n" };
            self.text(c, &[]);
        }
    }

    fn stmt(&mut self, depth: usize) {
        self.comment();
        match self.rng.gen_range(0..if depth == 0 { 4 } else { 7 }) {
            0 => {
                let ty = ["int", "char", "long", "unsigned", "size_t"][self.rng.gen_range(0..5)];
                self.text(ty, &[&format!("type:{ty}")]);
                let v = self.new_var();
                self.parts.push(Part::Var(v));
                self.op("=");
                self.expr(2);
                self.punct(";");
            }
            1 => {
                self.var();
                let op = ["=", "+=", "-=", "<<=", "|="][self.rng.gen_range(0..5)];
                self.op(op);
                self.expr(2);
                self.punct(";");
            }
            2 => {
                let api = ["memcpy", "strcpy", "printf", "free"][self.rng.gen_range(0..4)];
                self.text(api, &[&format!("call:{api}")]);
                self.punct("(");
                self.var();
                self.punct(",");
                self.expr(1);
                self.punct(")");
                self.punct(";");
            }
            3 => {
                self.var();
                self.op("++");
                self.punct(";");
            }
            4 => {
                self.text("if", &["kw:if"]);
                self.punct("(");
                self.expr(2);
                self.punct(")");
                self.block(depth - 1);
                if self.rng.gen_bool(0.5) {
                    self.text("else", &["kw:else"]);
                    self.block(depth - 1);
                }
            }
            5 => {
                self.text("for", &["kw:for"]);
                self.punct("(");
                self.var();
                self.op("=");
                self.number();
                self.punct(";");
                self.var();
                self.op("<");
                self.expr(1);
                self.punct(";");
                self.var();
                self.op("++");
                self.punct(")");
                self.block(depth - 1);
            }
            _ => {
                self.text("while", &["kw:while"]);
                self.punct("(");
                self.expr(1);
                self.punct(")");
                self.block(depth - 1);
            }
        }
    }

    fn block(&mut self, depth: usize) {
        self.punct("{");
        for _ in 0..self.rng.gen_range(1..4) {
            self.stmt(depth);
        }
        self.punct("}");
    }
}

impl CFunction {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut g = Gen { rng, parts: Vec::new(), vars: 0, funcs: 1 };
        g.text("int", &["type:int"]);
        g.parts.push(Part::Func(0));
        g.punct("(");
        g.text("int", &["type:int"]);
        let a = g.new_var();
        g.parts.push(Part::Var(a));
        g.punct(",");
        g.text("char", &["type:char"]);
        g.op("*");
        let b = g.new_var();
        g.parts.push(Part::Var(b));
        g.punct(")");
        g.punct("{");
        for _ in 0..g.rng.gen_range(2..7) {
            g.stmt(2);
        }
        g.text("return", &["kw:return"]);
        g.expr(2);
        g.punct(";");
        g.punct("}");
        let (parts, vars, funcs) = (g.parts, g.vars, g.funcs);
        CFunction { parts, vars, funcs }
    }

    /// Source text and the expected canonical tokens under `naming`.
    pub fn render(&self, naming: Naming) -> (String, Vec<String>) {
        self.render_as(naming, &naming.func(0))
    }

    /// As `render`, with the function itself (and its recursive calls) named `name`.
    pub fn render_as(&self, naming: Naming, name: &str) -> (String, Vec<String>) {
        let mut src = String::new();
        let mut toks = Vec::new();
        let mut order: Vec<usize> = Vec::new();
        for p in &self.parts {
            match p {
                Part::Text(s, t) => {
                    src.push_str(s);
                    toks.extend(t.iter().cloned());
                }
                Part::Var(v) => {
                    src.push_str(&naming.var(*v));
                    let idx = order.iter().position(|x| x == v).unwrap_or_else(|| {
                        order.push(*v);
                        order.len() - 1
                    });
                    toks.push(format!("var:{idx}"));
                }
                Part::Func(f) => {
                    if *f == 0 {
                        src.push_str(name);
                    } else {
                        src.push_str(&naming.func(*f));
                    }
                    toks.push("call:<unk>".into());
                }
            }
            src.push(' ');
        }
        (src, toks)
    }

    /// Identifier spellings used under `naming`.
    pub fn identifiers(&self, naming: Naming) -> Vec<String> {
        let mut v: Vec<String> = (0..self.vars).map(|i| naming.var(i)).collect();
        v.extend((0..self.funcs).map(|i| naming.func(i)));
        v
    }
}
