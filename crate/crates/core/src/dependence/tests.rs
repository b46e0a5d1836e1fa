use super::*;
use crate::frontend::parse_source;

const LOOP_DIVISION: &str = "\
func foo(n, y, r) {
    while n > 0 {
        r = r + 1
        n = n - 1
    }
    y = y * 2
    x = y / r
    return x
}
";

const WITH_CALL: &str = "\
func bar(v) {
    var w = v * 2
    return w
}

func foo(y, r) {
    x = y / bar(r)
    return x
}
";

fn summary(tokens: &[TokenOccurrence]) -> Vec<(&str, TokenClass)> {
    tokens.iter().map(|t| (t.text.as_str(), t.class)).collect()
}

fn find<'a>(tokens: &'a [TokenOccurrence], text: &str) -> &'a TokenOccurrence {
    tokens.iter().find(|t| t.text == text).unwrap()
}

#[test]
fn rhs_of_division_line() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    use TokenClass::*;
    assert_eq!(summary(&toks), vec![("y", Variable), ("/", Operator), ("r", Variable)]);
}

#[test]
fn rhs_with_user_function_call() {
    let ast = parse_source(WITH_CALL).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    use TokenClass::*;
    assert_eq!(
        summary(&toks),
        vec![("y", Variable), ("/", Operator), ("bar", UserFunc), ("r", Variable)]
    );
}

#[test]
fn literal_only_rhs_has_no_tokens() {
    let ast = parse_source("func f() {\n    x = 5\n}\n").unwrap();
    assert!(rhs_tokens(&ast, 2).unwrap().is_empty());
}

#[test]
fn rhs_of_non_assignment_line_is_an_error() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    assert_eq!(rhs_tokens(&ast, 2), Err(DependenceError::NotAnAssignment { line: 2 }));
}

#[test]
fn rhs_is_capped_at_sixteen() {
    let expr = (0..20).map(|i| format!("a{i}")).collect::<Vec<_>>().join(" + ");
    let src = format!("func f() {{\n    x = {expr}\n}}\n");
    let ast = parse_source(&src).unwrap();
    let toks = rhs_tokens(&ast, 2).unwrap();
    assert_eq!(toks.len(), MAX_TOKENS_PER_LINE);
    // dropped from the right
    assert_eq!(toks[0].text, "a0");
    assert_eq!(toks[14].text, "a7");
    assert_eq!(toks[15].text, "+");
}

#[test]
fn classification() {
    let src = "\
func bar(r) {
    return r
}

func foo(x, r) {
    z = x / ext_call(x) + bar(r)
}
";
    let ast = parse_source(src).unwrap();
    let toks = rhs_tokens(&ast, 6).unwrap();
    for t in &toks {
        assert_eq!(classify_token(t, &ast).unwrap(), t.class, "{}", t.text);
    }
    assert_eq!(find(&toks, "/").class, TokenClass::Operator);
    assert_eq!(find(&toks, "ext_call").class, TokenClass::BuiltinFunc);
    assert_eq!(find(&toks, "bar").class, TokenClass::UserFunc);
    assert_eq!(ast.kind(find(&toks, "ext_call").node), NodeKind::Call);
    assert_eq!(ast.kind(find(&toks, "bar").node), NodeKind::Identifier);
}

#[test]
fn unknown_callee() {
    let ast = parse_source("func f(a) {\n    x = nope(a)\n}\n").unwrap();
    assert!(matches!(
        rhs_tokens(&ast, 2),
        Err(DependenceError::UnknownCallee { .. })
    ));
}

#[test]
fn loop_updated_variable_resolves_to_loop_body() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    assert_eq!(resolve_endpoint(find(&toks, "r"), 7, &ast), Some(3));
    assert_eq!(resolve_endpoint(find(&toks, "y"), 7, &ast), Some(6));
    // r = r + 1 reads the parameter: back-edges are not followed
    let inner = rhs_tokens(&ast, 3).unwrap();
    assert_eq!(resolve_endpoint(find(&inner, "r"), 3, &ast), Some(1));
}

#[test]
fn undeclared_variable_has_no_endpoint() {
    let ast = parse_source("func f() {\n    x = z + 1\n}\n").unwrap();
    let toks = rhs_tokens(&ast, 2).unwrap();
    assert_eq!(resolve_endpoint(find(&toks, "z"), 2, &ast), None);
    let (ep, path) = get_path(find(&toks, "z"), 2, &ast).unwrap();
    assert_eq!(ep, None);
    assert_eq!(path, PathOrOneHot::Empty);
}

#[test]
fn user_function_resolves_to_its_return() {
    let ast = parse_source(WITH_CALL).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    let bar = find(&toks, "bar");
    assert_eq!(resolve_endpoint(bar, 7, &ast), Some(3));
    let path = extract_ast_path(bar, 3, &ast).unwrap();
    assert_eq!(path.steps.last().unwrap().kind, NodeKind::Return);
    assert!(path.contains_kind(NodeKind::Module));
    assert!(path.is_up_then_down());
}

#[test]
fn loop_path_contains_loop_and_binop() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    let r = find(&toks, "r");
    let (ep, repr) = get_path(r, 7, &ast).unwrap();
    assert_eq!(ep, Some(3));
    let PathOrOneHot::Path(path) = repr else {
        panic!("expected a path")
    };
    assert!(path.contains_kind(NodeKind::Loop));
    assert!(path.contains_kind(NodeKind::BinOp));
    assert_eq!(
        path.render(),
        "Identifier^ BinOp^ Assign^ Block^ Loopv Blockv Assignv Identifierv"
    );
}

#[test]
fn sibling_definition_path() {
    let ast = parse_source("func f() {\n    y = 1\n    x = y\n}\n").unwrap();
    let toks = rhs_tokens(&ast, 3).unwrap();
    let path = extract_ast_path(&toks[0], 2, &ast).unwrap();
    use Direction::*;
    use NodeKind::*;
    let expected = [
        (Identifier, Up),
        (Assign, Up),
        (Block, Up),
        (Assign, Down),
        (Identifier, Down),
    ];
    let got: Vec<_> = path.steps.iter().map(|s| (s.kind, s.direction)).collect();
    assert_eq!(got, expected);
}

#[test]
fn self_path_has_one_step() {
    let ast = parse_source("func f() {\n    y = 1\n}\n").unwrap();
    let target = ast.nodes.iter().position(|n| n.kind == NodeKind::Identifier).unwrap();
    let p = path_between(&ast, NodeId(target), NodeId(target));
    assert_eq!(p.steps.len(), 1);
    assert_eq!(p.steps[0].kind, NodeKind::Identifier);
}

#[test]
fn operators_get_one_hot_and_no_endpoint() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    let (ep, repr) = get_path(find(&toks, "/"), 7, &ast).unwrap();
    assert_eq!(ep, None);
    assert_eq!(
        repr,
        PathOrOneHot::OneHot {
            text: "/".into(),
            class: TokenClass::Operator
        }
    );
}

#[test]
fn previous_line_mode() {
    let ast = parse_source(LOOP_DIVISION).unwrap();
    let toks = rhs_tokens(&ast, 7).unwrap();
    let (ep, repr) = get_path_with_mode(find(&toks, "r"), 7, &ast, EndpointMode::PreviousLine).unwrap();
    assert_eq!(ep, Some(6));
    let PathOrOneHot::Path(p) = repr else { panic!() };
    assert_eq!(p.steps.last().unwrap().kind, NodeKind::Assign);

    let first = parse_source("func f(a) { x = a }").unwrap();
    let toks = rhs_tokens(&first, 1).unwrap();
    let (ep, repr) = get_path_with_mode(&toks[0], 1, &first, EndpointMode::PreviousLine).unwrap();
    assert_eq!((ep, repr), (None, PathOrOneHot::Empty));
}

#[test]
fn vocab_sizes_and_unk() {
    let ast = parse_source("func f(a, b) {\n    x = a + b\n    y = x / a\n}\n").unwrap();
    let vocab = build_vocabs(std::slice::from_ref(&ast), EndpointMode::MostRecentDefinition).unwrap();
    assert_eq!(vocab.operator_size(), 3);
    assert_eq!(vocab.operator_index("%"), vocab.operator_unk());
    assert_eq!(vocab.builtin_size(), 1);
    assert!(vocab.node_kind_size() <= vocab::MAX_NODE_KIND_VOCAB);

    let empty = parse_source("func f() {\n    x = 1\n}\n").unwrap();
    let vocab = build_vocabs(std::slice::from_ref(&empty), EndpointMode::MostRecentDefinition).unwrap();
    assert_eq!(vocab.node_kind_size(), 1);
    assert_eq!(vocab.node_kind_unk(), 0);
}

#[test]
fn short_path_encodes_in_full() {
    let ast = parse_source("func f() {\n    y = 1\n    x = y\n}\n").unwrap();
    let vocab = build_vocabs(std::slice::from_ref(&ast), EndpointMode::MostRecentDefinition).unwrap();
    let toks = rhs_tokens(&ast, 3).unwrap();
    let path = extract_ast_path(&toks[0], 2, &ast).unwrap();
    let enc = encode_path(&path, &vocab);
    assert_eq!(enc.indices.len(), 5);
    assert!(!enc.truncated);
    assert!(enc.indices.iter().all(|&i| i < vocab.node_kind_unk()));
    assert!(encode_path(&AstPath::new(Vec::new()), &vocab).indices.is_empty());
}

#[test]
fn long_path_keeps_both_ends() {
    // 17 nested ifs around `y = -x`: Identifier, UnaryOp, Assign, 17 x (Block, If),
    // function Block, FuncDecl, Param = 40 steps.
    let depth = 17;
    let mut src = String::from("func f(x) {\n");
    for _ in 0..depth {
        src.push_str("if x {\n");
    }
    src.push_str("y = -x\n");
    for _ in 0..depth {
        src.push_str("}\n");
    }
    src.push_str("}\n");
    let ast = parse_source(&src).unwrap();
    let line = depth + 2;
    let toks = rhs_tokens(&ast, line).unwrap();
    let x = find(&toks, "x");
    let ep = resolve_endpoint(x, line, &ast).unwrap();
    assert_eq!(ep, 1);
    let path = extract_ast_path(x, ep, &ast).unwrap();
    assert_eq!(path.len(), 40);
    assert!(path.truncated);
    let vocab = build_vocabs(std::slice::from_ref(&ast), EndpointMode::MostRecentDefinition).unwrap();
    let enc = encode_path(&path, &vocab);
    assert_eq!(enc.indices.len(), MAX_PATH_LEN);
    assert!(enc.truncated);
    let full: Vec<usize> = path.steps.iter().map(|&s| vocab.step_index(s)).collect();
    assert_eq!(&enc.indices[..16], &full[..16]);
    assert_eq!(&enc.indices[16..], &full[24..]);
}
