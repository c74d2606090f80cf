use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree node. Powers always carry a constant exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
}

// Binding strength used by the printer; matches the parser's grammar.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Node {
    pub fn constant(c: f64) -> Self {
        Node::Const(c)
    }

    pub fn var(i: usize) -> Self {
        Node::Var(i)
    }

    pub fn unary(op: UnaryOp, arg: Node) -> Self {
        Node::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Node, rhs: Node) -> Self {
        Node::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn pow(base: Node, exponent: f64) -> Self {
        Node::Pow(Box::new(base), exponent)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Unary(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Evaluates a variable-free subtree.
    pub(crate) fn fold_constant(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Var(_) => None,
            Node::Unary(op, a) => {
                let v = a.fold_constant()?;
                Some(match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Log => v.ln(),
                    UnaryOp::Sqrt => v.sqrt(),
                })
            }
            Node::Binary(op, a, b) => {
                let (x, y) = (a.fold_constant()?, b.fold_constant()?);
                Some(match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                })
            }
            Node::Pow(a, c) => Some(a.fold_constant()?.powf(*c)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Const(c) if *c < 0.0 || c.is_sign_negative() => PREC_NEG,
            Node::Const(_) | Node::Var(_) => PREC_ATOM,
            Node::Unary(UnaryOp::Neg, _) => PREC_NEG,
            Node::Unary(..) => PREC_ATOM,
            Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
            Node::Binary(..) => PREC_MUL,
            Node::Pow(..) => PREC_POW,
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // Debug formatting of f64 is the shortest representation that parses back
    // to the same bits.
    if c.is_sign_negative() {
        write!(f, "-{:?}", -c)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, node: &Node, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({node})")
    } else {
        write!(f, "{node}")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write_number(f, *c),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_operand(f, a, a.precedence() < PREC_NEG)
            }
            Node::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            Node::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinaryOp::Add => (" + ", PREC_ADD),
                    BinaryOp::Sub => (" - ", PREC_ADD),
                    BinaryOp::Mul => ("*", PREC_MUL),
                    BinaryOp::Div => ("/", PREC_MUL),
                };
                write_operand(f, a, a.precedence() < prec)?;
                f.write_str(sym)?;
                write_operand(f, b, b.precedence() <= prec)
            }
            Node::Pow(a, c) => {
                write_operand(f, a, a.precedence() <= PREC_POW)?;
                f.write_str("^")?;
                if c.is_sign_negative() {
                    f.write_str("(")?;
                    write_number(f, *c)?;
                    f.write_str(")")
                } else {
                    write_number(f, *c)
                }
            }
        }
    }
}
