//! Small generated corpora: a handful of algorithm families written with
//! randomized identifiers, loop styles and filler statements. Used where the
//! real benchmarks are not at hand (toy training, property tests, benches).

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Lang, SourceProgram};
use crate::error::{Error, Result};
use crate::seed;

pub const FAMILIES: usize = 10;

const NAMES: &[&str] = &[
    "i", "j", "k", "n", "m", "p", "q", "t", "x", "y", "a", "b", "c", "idx", "cnt", "num", "len",
    "total", "acc", "res", "val", "tmp", "data", "arr", "buf", "cur", "prev", "next", "count",
    "value", "result", "limit", "size", "first", "second", "item", "left", "right", "step", "sum2",
    "maxVal", "minVal", "curIdx", "tmpValue", "lastSeen", "nextItem", "itemCount", "inputLen",
];

const DOCS: [&[&str]; FAMILIES] = [
    &["Returns the sum of the array elements.", "Adds up all values in the array.", "Computes the total of the given numbers."],
    &["Returns the largest element of the array.", "Finds the maximum value in the array.", "Computes the max of the given numbers."],
    &["Computes the factorial of n.", "Returns n factorial.", "Multiplies all integers from one to n."],
    &["Returns the n-th Fibonacci number.", "Computes the Fibonacci sequence value at position n.", "Iteratively computes Fibonacci of n."],
    &["Counts the decimal digits of a number.", "Returns how many digits n has.", "Computes the number of digits in n."],
    &["Reverses the digits of a number.", "Returns n with its digits in reverse order.", "Computes the digit reversal of n."],
    &["Counts the primes below n.", "Returns the number of prime numbers smaller than n.", "Computes how many primes are less than n."],
    &["Sorts the array in ascending order.", "Bubble sorts the given array.", "Orders the array elements from small to large."],
    &["Returns the greatest common divisor of two numbers.", "Computes the gcd of a and b.", "Finds the largest common divisor of the two values."],
    &["Counts the even elements of the array.", "Returns how many values in the array are even.", "Computes the number of even numbers in the array."],
];

const METHOD_NAMES: [&[&str]; FAMILIES] = [
    &["sum", "sumArray", "total", "addAll"],
    &["max", "findMax", "largest", "maxOf"],
    &["factorial", "fact", "computeFactorial"],
    &["fib", "fibonacci", "nthFibonacci"],
    &["countDigits", "digitCount", "numDigits"],
    &["reverse", "reverseDigits", "reverseNumber"],
    &["countPrimes", "primeCount", "primesBelow"],
    &["sort", "bubbleSort", "sortArray"],
    &["gcd", "greatestCommonDivisor", "commonDivisor"],
    &["countEven", "evenCount", "numEven"],
];

/// Documentation variants for a family, usable as search queries.
pub fn family_docs(family: usize) -> &'static [&'static str] {
    DOCS[family % FAMILIES]
}

struct Gen {
    rng: ChaCha8Rng,
    names: Vec<&'static str>,
}

impl Gen {
    fn new(rng: ChaCha8Rng) -> Self {
        Gen { rng, names: Vec::new() }
    }

    /// Fresh set of distinct identifiers for one program.
    fn reset(&mut self) {
        let mut pool = NAMES.to_vec();
        pool.shuffle(&mut self.rng);
        self.names = pool;
    }

    fn name(&mut self) -> &'static str {
        self.names.pop().unwrap_or("z")
    }

    fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    /// Counting loop `i` in `[lo, hi)` around `body`, as a for or while loop.
    fn counted(&mut self, i: &str, lo: &str, hi: &str, body: &str) -> String {
        if self.coin() {
            format!("for ({i} = {lo}; {i} < {hi}; {i}++) {{\n{body}\n}}")
        } else {
            format!("{i} = {lo};\nwhile ({i} < {hi}) {{\n{body}\n{i}++;\n}}")
        }
    }

    fn filler(&mut self, lang: Lang) -> String {
        if !self.coin() {
            return String::new();
        }
        let u = self.name();
        let k: i32 = self.rng.random_range(0..50);
        match (lang, self.rng.random_range(0..3)) {
            (_, 0) => format!("int {u} = {k};\n"),
            (Lang::C, 1) => format!("int {u};\n{u} = {k} * 2;\n"),
            (Lang::Java, 1) => format!("long {u} = {k}L;\n"),
            _ => format!("int {u} = {k} + 1;\n{u}--;\n"),
        }
    }
}

/// Core computation of a family as statements over `input` (array or
/// scalar) producing `out`. Declarations use `int` and C/Java common syntax.
fn body(g: &mut Gen, family: usize, arr: &str, n: &str, out: &str) -> String {
    let i = g.name();
    let j = g.name();
    let t = g.name();
    match family {
        0 => {
            let lp = g.counted(i, "0", n, &format!("{out} += {arr}[{i}];"));
            format!("int {i};\n{out} = 0;\n{lp}")
        }
        1 => {
            let lp = g.counted(i, "1", n, &format!("if ({arr}[{i}] > {out}) {{\n{out} = {arr}[{i}];\n}}"));
            format!("int {i};\n{out} = {arr}[0];\n{lp}")
        }
        2 => {
            let lp = g.counted(i, "1", &format!("{n} + 1"), &format!("{out} = {out} * {i};"));
            format!("int {i};\n{out} = 1;\n{lp}")
        }
        3 => {
            let lp = g.counted(
                i,
                "0",
                n,
                &format!("int {t} = {j} + {out};\n{j} = {out};\n{out} = {t};"),
            );
            format!("int {i};\nint {j} = 1;\n{out} = 0;\n{lp}")
        }
        4 => format!(
            "{out} = 0;\nint {t} = {n};\nif ({t} == 0) {{\n{out} = 1;\n}}\nwhile ({t} > 0) {{\n{t} = {t} / 10;\n{out}++;\n}}"
        ),
        5 => format!(
            "{out} = 0;\nint {t} = {n};\nwhile ({t} != 0) {{\n{out} = {out} * 10 + {t} % 10;\n{t} /= 10;\n}}"
        ),
        6 => {
            let inner = if g.coin() {
                format!("for ({j} = 2; {j} * {j} <= {i}; {j}++) {{\nif ({i} % {j} == 0) {{\n{t} = 0;\nbreak;\n}}\n}}")
            } else {
                format!("{j} = 2;\nwhile ({j} * {j} <= {i} && {t} == 1) {{\nif ({i} % {j} == 0) {{\n{t} = 0;\n}}\n{j}++;\n}}")
            };
            let lp = g.counted(i, "2", n, &format!("int {t} = 1;\n{inner}\nif ({t} == 1) {{\n{out}++;\n}}"));
            format!("int {i};\nint {j};\n{out} = 0;\n{lp}")
        }
        7 => {
            let swap = format!(
                "if ({arr}[{j}] > {arr}[{j} + 1]) {{\nint {t} = {arr}[{j}];\n{arr}[{j}] = {arr}[{j} + 1];\n{arr}[{j} + 1] = {t};\n}}"
            );
            let inner = g.counted(j, "0", &format!("{n} - 1 - {i}"), &swap);
            let outer = g.counted(i, "0", &format!("{n} - 1"), &inner);
            format!("int {i};\nint {j};\n{outer}\n{out} = {arr}[0];")
        }
        8 => format!(
            "int {i} = {arr}[0];\nint {j} = {n};\nwhile ({j} != 0) {{\nint {t} = {i} % {j};\n{i} = {j};\n{j} = {t};\n}}\n{out} = {i};"
        ),
        _ => {
            let test = if g.coin() {
                format!("{arr}[{i}] % 2 == 0")
            } else {
                format!("({arr}[{i}] & 1) == 0")
            };
            let lp = g.counted(i, "0", n, &format!("if ({test}) {{\n{out}++;\n}}"));
            format!("int {i};\n{out} = 0;\n{lp}")
        }
    }
}

fn c_program(g: &mut Gen, family: usize) -> String {
    g.reset();
    let arr = g.name();
    let n = g.name();
    let out = g.name();
    let i = g.name();
    let filler = g.filler(Lang::C);
    let read = g.counted(i, "0", n, &format!("scanf(\"%d\", &{arr}[{i}]);"));
    let core = body(g, family, arr, n, out);
    format!(
        "#include <stdio.h>\n\nint main() {{\nint {arr}[100];\nint {n};\nint {out};\nint {i};\n{filler}scanf(\"%d\", &{n});\n{read}\n{core}\nprintf(\"%d\\n\", {out});\nreturn 0;\n}}\n"
    )
}

fn java_method(g: &mut Gen, family: usize) -> (String, String) {
    g.reset();
    let arr = g.name();
    let n = g.name();
    let out = g.name();
    let name = *METHOD_NAMES[family].choose(&mut g.rng).unwrap_or(&"run");
    let doc = *DOCS[family].choose(&mut g.rng).unwrap_or(&"");
    let filler = g.filler(Lang::Java);
    let core = body(g, family, arr, n, out);
    let modifiers = if g.coin() { "public static" } else { "static" };
    let text = format!(
        "{modifiers} int {name}(int[] {arr}, int {n}) {{\n{filler}int {out};\n{core}\nreturn {out};\n}}\n"
    );
    (text, doc.to_string())
}

/// `per_family` programs for each of the first `families` families. Labels
/// are family indices; Java methods also carry a doc string.
pub fn generate(lang: Lang, families: usize, per_family: usize, seed: u64) -> Result<Vec<SourceProgram>> {
    if families == 0 || families > FAMILIES {
        return Err(Error::arg(format!("families must be in 1..={FAMILIES}")));
    }
    let mut g = Gen::new(seed::rng(seed, &format!("corpus.synthetic.{lang}")));
    let mut out = Vec::with_capacity(families * per_family);
    for k in 0..per_family {
        for f in 0..families {
            let id = format!("syn-{lang}-{f}-{k}");
            let p = match lang {
                Lang::C => SourceProgram::new(id, lang, c_program(&mut g, f))?,
                Lang::Java => {
                    let (text, doc) = java_method(&mut g, f);
                    SourceProgram::new(id, lang, text)?.with_doc(doc)
                }
            };
            out.push(p.with_label(f as u32));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_to_ast;

    #[test]
    fn every_generated_program_parses() {
        for lang in [Lang::C, Lang::Java] {
            for p in generate(lang, FAMILIES, 12, 5).unwrap() {
                let ast = parse_to_ast(&p).unwrap_or_else(|e| panic!("{e}\n{}", p.text));
                ast.validate().unwrap();
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate(Lang::Java, 4, 3, 9).unwrap();
        let b = generate(Lang::Java, 4, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(Lang::Java, 4, 3, 10).unwrap());
    }
}
