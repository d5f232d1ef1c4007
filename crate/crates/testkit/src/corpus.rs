use depdiag_core::interp::{execute, Limits, TestCase, Value, RETURN_VAR};
use depdiag_core::lang::{CheckedProgram, Type};

/// A method of the corpus together with the inputs its tests use.
#[derive(Debug, Clone)]
pub struct Subject {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
    pub method: &'static str,
    /// Variables compared at the end of a run; the return value is always
    /// compared for non-void methods.
    pub outputs: &'static [&'static str],
    pub inputs: Vec<Vec<Value>>,
}

pub const FIG2: &str = include_str!("../../../corpus/fig2.mjv");
pub const ADDER: &str = include_str!("../../../corpus/adder.mjv");
pub const LIBRARY: &str = include_str!("../../../corpus/library.mjv");
pub const BUBBLE: &str = include_str!("../../../corpus/bubble.mjv");
pub const INSERTION: &str = include_str!("../../../corpus/insertion.mjv");
pub const SHELL: &str = include_str!("../../../corpus/shell.mjv");
pub const SELECTION: &str = include_str!("../../../corpus/selection.mjv");
pub const HEAP: &str = include_str!("../../../corpus/heap.mjv");
pub const GNOME: &str = include_str!("../../../corpus/gnome.mjv");

const ARRAYS: &[&[i64]] = &[&[3, 1, 2], &[5, 4, 3, 2, 1], &[2, 7, 1, 8, 2, 8], &[1, 2, 3, 4], &[9, 0, 9, 0], &[4, 1, 3, 1, 5, 9, 2, 6]];

fn array_inputs() -> Vec<Vec<Value>> {
    ARRAYS.iter().map(|a| vec![Value::array(a)]).collect()
}

fn bits() -> Vec<Vec<Value>> {
    (0..8).map(|m| vec![Value::int(m & 1), Value::int((m >> 1) & 1), Value::int((m >> 2) & 1)]).collect()
}

fn sort(name: &'static str, file: &'static str, source: &'static str, method: &'static str) -> Subject {
    Subject { name, file, source, method, outputs: &["a"], inputs: array_inputs() }
}

/// All corpus subjects. Sorts come last.
pub fn subjects() -> Vec<Subject> {
    let books = |authors: &[i64], loans: &[i64], n: i64| vec![Value::array(authors), Value::array(loans), Value::int(n)];
    vec![
        Subject {
            name: "fig2",
            file: "fig2.mjv",
            source: FIG2,
            method: "test",
            outputs: &["f", "g"],
            inputs: vec![
                [3, 2, 2, 3, 3].iter().map(|&x| Value::int(x)).collect(),
                [1, 2, 3, 4, 5].iter().map(|&x| Value::int(x)).collect(),
                [2, 0, 5, 1, 3].iter().map(|&x| Value::int(x)).collect(),
            ],
        },
        Subject { name: "adder", file: "adder.mjv", source: ADDER, method: "adder", outputs: &["s", "co"], inputs: bits() },
        Subject {
            name: "library",
            file: "library.mjv",
            source: LIBRARY,
            method: "topAuthor",
            outputs: &[],
            inputs: vec![
                books(&[0, 1, 1, 2, 1, 0], &[0, 0, 1, 0, 0, 0], 3),
                books(&[2, 2, 0, 1, 2, 0, 0], &[0, 1, 0, 0, 1, 0, 0], 3),
                books(&[1, 0, 1, 0], &[0, 0, 0, 1], 2),
            ],
        },
        Subject {
            name: "countBooks",
            file: "library.mjv",
            source: LIBRARY,
            method: "countBooks",
            outputs: &[],
            inputs: vec![vec![Value::array(&[0, 1, 1, 2, 1]), Value::int(1)], vec![Value::array(&[3, 3, 0]), Value::int(3)]],
        },
        Subject {
            name: "shelve",
            file: "library.mjv",
            source: LIBRARY,
            method: "shelve",
            outputs: &["authors"],
            inputs: vec![vec![Value::array(&[0, 1, 1, 2]), Value::array(&[0, 1, 0, 1])], vec![Value::array(&[5, 6]), Value::array(&[0, 0])]],
        },
        sort("bubbleSort", "bubble.mjv", BUBBLE, "bubbleSort"),
        sort("insertionSort", "insertion.mjv", INSERTION, "insertionSort"),
        sort("shellSort", "shell.mjv", SHELL, "shellSort"),
        sort("selectionSort", "selection.mjv", SELECTION, "selectionSort"),
        sort("heapSort", "heap.mjv", HEAP, "heapSort"),
        sort("gnomeSort", "gnome.mjv", GNOME, "gnomeSort"),
        Subject {
            name: "siftDown",
            file: "heap.mjv",
            source: HEAP,
            method: "siftDown",
            outputs: &["a"],
            inputs: vec![
                vec![Value::array(&[1, 5, 3, 4, 2]), Value::int(0), Value::int(4)],
                vec![Value::array(&[2, 9, 8, 1]), Value::int(0), Value::int(3)],
            ],
        },
    ]
}

pub fn is_sort(s: &Subject) -> bool {
    s.outputs == ["a"] && s.name.ends_with("Sort")
}

/// A test whose expectations are what `intended` computes on `args`.
pub fn expected_test(intended: &CheckedProgram, method: &str, outputs: &[&str], args: &[Value]) -> TestCase {
    let trace = execute(intended, method, args, Limits::default()).unwrap_or_else(|e| panic!("{method}: {e}"));
    let expect = outputs.iter().map(|v| ((*v).to_string(), trace.final_env[*v].clone())).collect();
    let decl = intended.method(method).expect("method");
    let expect_return = (decl.return_type != Type::Void).then(|| trace.return_value.clone().expect(RETURN_VAR));
    TestCase { method: method.to_string(), args: args.to_vec(), expect, expect_return }
}

impl Subject {
    pub fn program(&self) -> CheckedProgram {
        crate::checked(self.file, self.source)
    }

    pub fn tests(&self, intended: &CheckedProgram) -> Vec<TestCase> {
        self.inputs.iter().map(|a| expected_test(intended, self.method, self.outputs, a)).collect()
    }
}
