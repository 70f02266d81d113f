#include "dopc/slang/parser.hpp"

#include <cctype>
#include <functional>
#include <map>
#include <set>

namespace dopc::slang {

namespace {

struct Token {
    enum class Kind { End, Ident, Int, Str, HexStr, Punct };
    Kind kind = Kind::End;
    std::string text;          // Ident / Punct
    uint64_t value = 0;        // Int
    std::vector<uint8_t> bytes;  // Str / HexStr
    Loc loc;
};

struct Lexer {
    const std::string& src;
    size_t i = 0;
    int line = 1, col = 1;
    std::vector<Diag> diags;

    char peek(size_t k = 0) const { return i + k < src.size() ? src[i + k] : '\0'; }
    char advance() {
        char c = src[i++];
        if (c == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        return c;
    }
    void skip_ws() {
        for (;;) {
            while (i < src.size() && isspace(static_cast<unsigned char>(peek()))) advance();
            if (peek() == '#') {
                while (i < src.size() && peek() != '\n') advance();
                continue;
            }
            if (peek() == '/' && peek(1) == '/') {
                while (i < src.size() && peek() != '\n') advance();
                continue;
            }
            break;
        }
    }

    uint8_t escape(char c) {
        switch (c) {
            case 'n': return '\n';
            case 't': return '\t';
            case 'r': return '\r';
            case '0': return 0;
            default: return static_cast<uint8_t>(c);
        }
    }

    Token next() {
        skip_ws();
        Token t;
        t.loc = {line, col};
        if (i >= src.size()) return t;
        char c = peek();
        if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (isalnum(static_cast<unsigned char>(peek())) || peek() == '_') id += advance();
            if (id == "hex" && peek() == '"') {
                advance();
                std::string body;
                while (i < src.size() && peek() != '"') body += advance();
                if (peek() == '"') advance();
                t.kind = Token::Kind::HexStr;
                if (body.size() % 2)
                    diags.push_back({t.loc.line, t.loc.col, "odd-length hex string"});
                for (size_t k = 0; k + 1 < body.size() + 1 && k + 1 <= body.size(); k += 2) {
                    auto nib = [&](char h) -> int {
                        if (isdigit(static_cast<unsigned char>(h))) return h - '0';
                        h = static_cast<char>(tolower(h));
                        if (h >= 'a' && h <= 'f') return h - 'a' + 10;
                        diags.push_back({t.loc.line, t.loc.col, "bad hex digit"});
                        return 0;
                    };
                    if (k + 1 < body.size())
                        t.bytes.push_back(static_cast<uint8_t>(nib(body[k]) * 16 + nib(body[k + 1])));
                }
                return t;
            }
            if (id.find("__") != std::string::npos)
                diags.push_back({t.loc.line, t.loc.col,
                                 "identifier '" + id + "' uses the reserved '__' sequence"});
            t.kind = Token::Kind::Ident;
            t.text = id;
            return t;
        }
        if (isdigit(static_cast<unsigned char>(c))) {
            uint64_t v = 0;
            if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
                advance();
                advance();
                bool any = false;
                while (isxdigit(static_cast<unsigned char>(peek()))) {
                    char h = advance();
                    v = v * 16 + (isdigit(static_cast<unsigned char>(h)) ? h - '0'
                                                                         : tolower(h) - 'a' + 10);
                    any = true;
                }
                if (!any) diags.push_back({t.loc.line, t.loc.col, "bad hex literal"});
            } else {
                while (isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (advance() - '0');
            }
            t.kind = Token::Kind::Int;
            t.value = v;
            return t;
        }
        if (c == '\'') {
            advance();
            uint8_t v = 0;
            if (peek() == '\\') {
                advance();
                v = escape(advance());
            } else if (i < src.size()) {
                v = static_cast<uint8_t>(advance());
            }
            if (peek() == '\'') advance();
            else diags.push_back({t.loc.line, t.loc.col, "unterminated char literal"});
            t.kind = Token::Kind::Int;
            t.value = v;
            return t;
        }
        if (c == '"') {
            advance();
            t.kind = Token::Kind::Str;
            while (i < src.size() && peek() != '"') {
                char d = advance();
                t.bytes.push_back(d == '\\' && i < src.size() ? escape(advance())
                                                              : static_cast<uint8_t>(d));
            }
            if (peek() == '"') advance();
            else diags.push_back({t.loc.line, t.loc.col, "unterminated string"});
            return t;
        }
        if (c == '@') {
            advance();
            std::string id = "@";
            while (isalnum(static_cast<unsigned char>(peek())) || peek() == '_') id += advance();
            t.kind = Token::Kind::Punct;
            t.text = id;
            return t;
        }
        // punctuation; two-char operators first
        static const char* two[] = {"==", "!=", ">="};
        for (const char* p : two)
            if (c == p[0] && peek(1) == p[1]) {
                advance();
                advance();
                t.kind = Token::Kind::Punct;
                t.text = p;
                return t;
            }
        advance();
        t.kind = Token::Kind::Punct;
        t.text = std::string(1, c);
        return t;
    }
};

const std::set<std::string> kKeywords = {
    "proc", "input", "if", "else", "while", "for", "repeat", "until", "loop", "break",
    "continue", "return", "asm", "signed", "mem", "byte", "int16", "int32", "int64", "addr"};

struct Parser {
    Lexer lex;
    Token tok;
    std::vector<Diag> diags;

    explicit Parser(const std::string& src) : lex{src} { tok = lex.next(); }

    [[noreturn]] void fail(const std::string& m) {
        diags.push_back({tok.loc.line, tok.loc.col, m});
        throw Error(Stage::Parse, diags);
    }
    void advance() { tok = lex.next(); }
    bool at_punct(const std::string& p) const {
        return tok.kind == Token::Kind::Punct && tok.text == p;
    }
    bool at_ident(const std::string& id) const {
        return tok.kind == Token::Kind::Ident && tok.text == id;
    }
    void expect_punct(const std::string& p) {
        if (!at_punct(p)) fail("expected '" + p + "'");
        advance();
    }
    std::string expect_name() {
        if (tok.kind != Token::Kind::Ident) fail("expected identifier");
        if (kKeywords.count(tok.text)) fail("'" + tok.text + "' is a keyword");
        std::string n = tok.text;
        advance();
        return n;
    }
    std::optional<TypeTag> peek_type() {
        if (tok.kind != Token::Kind::Ident) return std::nullopt;
        return parse_type_name(tok.text);
    }

    PayloadAst parse() {
        PayloadAst ast;
        while (tok.kind != Token::Kind::End) {
            if (at_ident("proc")) {
                ast.procedures.push_back(parse_proc());
            } else {
                ast.globals.push_back(parse_decl(true));
                expect_punct(";");
            }
        }
        if (!lex.diags.empty()) {
            diags.insert(diags.end(), lex.diags.begin(), lex.diags.end());
            throw Error(Stage::Parse, diags);
        }
        return ast;
    }

    ProcDecl parse_proc() {
        ProcDecl p;
        p.loc = tok.loc;
        advance();  // proc
        if (auto t = peek_type()) {
            p.return_type = *t;
            advance();
        }
        p.name = expect_name();
        expect_punct("(");
        while (!at_punct(")")) {
            auto t = peek_type();
            if (!t) fail("expected parameter type");
            advance();
            p.params.emplace_back(*t, expect_name());
            if (at_punct(",")) advance();
            else break;
        }
        expect_punct(")");
        p.body = parse_block();
        return p;
    }

    std::vector<StmtPtr> parse_block() {
        expect_punct("{");
        std::vector<StmtPtr> out;
        while (!at_punct("}")) {
            if (tok.kind == Token::Kind::End) fail("unterminated block");
            out.push_back(parse_stmt());
        }
        advance();
        return out;
    }

    VarDecl parse_decl_head() {
        VarDecl d;
        d.loc = tok.loc;
        if (at_ident("input")) {
            d.input = true;
            advance();
        }
        auto t = peek_type();
        if (!t) fail("expected type name");
        d.type = *t;
        advance();
        d.name = expect_name();
        if (at_punct("[")) {
            advance();
            d.is_array = true;
            if (tok.kind == Token::Kind::Int) {
                d.array_len = tok.value;
                advance();
            }
            expect_punct("]");
        }
        return d;
    }

    VarDecl parse_decl(bool allow_input) {
        VarDecl d = parse_decl_head();
        if (d.input && !allow_input) fail("'input' is only valid at file scope");
        if (at_punct("=")) {
            advance();
            parse_initializer(d);
        }
        if (d.is_array && d.array_len == 0)
            fail("array '" + d.name + "' needs a length or an initializer");
        return d;
    }

    void parse_initializer(VarDecl& d) {
        int w = d.type.width_bytes ? d.type.width_bytes : 8;
        auto push_elem = [&](uint64_t v) {
            for (int b = 0; b < w; b++) d.array_init.push_back(static_cast<uint8_t>(v >> (8 * b)));
        };
        if (d.is_array) {
            d.const_initialized = true;
            if (tok.kind == Token::Kind::Str) {
                if (d.type.kind != TypeKind::Byte) fail("string initializer requires a byte array");
                for (uint8_t b : tok.bytes) d.array_init.push_back(b);
                if (!d.array_len) d.array_len = tok.bytes.size();
                advance();
            } else if (tok.kind == Token::Kind::HexStr) {
                if (tok.bytes.size() % w)
                    fail("hex initializer length is not a multiple of the element size");
                d.array_init.assign(tok.bytes.begin(), tok.bytes.end());
                if (!d.array_len) d.array_len = tok.bytes.size() / w;
                advance();
            } else if (at_punct("{")) {
                advance();
                uint64_t n = 0;
                while (!at_punct("}")) {
                    bool neg = false;
                    if (at_punct("-")) {
                        neg = true;
                        advance();
                    }
                    if (tok.kind != Token::Kind::Int) fail("expected integer in array initializer");
                    push_elem(mask_width(neg ? ~tok.value + 1 : tok.value, w));
                    n++;
                    advance();
                    if (at_punct(",")) advance();
                }
                advance();
                if (!d.array_len) d.array_len = n;
            } else {
                fail("expected array initializer");
            }
            if (d.array_len * static_cast<uint64_t>(w) < d.array_init.size())
                fail("initializer longer than array '" + d.name + "'");
        } else {
            bool neg = false;
            if (at_punct("-")) {
                neg = true;
                advance();
            }
            if (tok.kind != Token::Kind::Int) fail("expected constant initializer");
            d.init = mask_width(neg ? ~tok.value + 1 : tok.value, w);
            advance();
        }
    }

    StmtPtr parse_stmt() {
        auto s = std::make_unique<Stmt>();
        s->loc = tok.loc;
        if (at_punct("@maxiter")) {
            advance();
            expect_punct("(");
            if (tok.kind != Token::Kind::Int || tok.value == 0) fail("@maxiter needs a positive count");
            uint64_t n = tok.value;
            advance();
            expect_punct(")");
            StmtPtr inner = parse_stmt();
            if (inner->kind != Stmt::Kind::While && inner->kind != Stmt::Kind::For &&
                inner->kind != Stmt::Kind::RepeatUntil && inner->kind != Stmt::Kind::Loop)
                fail("@maxiter must precede a loop");
            inner->maxiter = n;
            return inner;
        }
        if (at_ident("if")) {
            s->kind = Stmt::Kind::If;
            advance();
            expect_punct("(");
            s->cond = parse_expr();
            expect_punct(")");
            s->body = parse_block();
            if (at_ident("else")) {
                advance();
                if (at_ident("if")) {
                    s->else_body.push_back(parse_stmt());
                } else {
                    s->else_body = parse_block();
                }
            }
            return s;
        }
        if (at_ident("while")) {
            s->kind = Stmt::Kind::While;
            advance();
            expect_punct("(");
            s->cond = parse_expr();
            expect_punct(")");
            s->body = parse_block();
            return s;
        }
        if (at_ident("for")) {
            s->kind = Stmt::Kind::For;
            advance();
            expect_punct("(");
            if (!at_punct(";")) s->init = parse_simple_stmt();
            expect_punct(";");
            if (!at_punct(";")) s->cond = parse_expr();
            expect_punct(";");
            if (!at_punct(")")) s->step = parse_simple_stmt();
            expect_punct(")");
            s->body = parse_block();
            return s;
        }
        if (at_ident("repeat")) {
            s->kind = Stmt::Kind::RepeatUntil;
            advance();
            s->body = parse_block();
            if (!at_ident("until")) fail("expected 'until'");
            advance();
            expect_punct("(");
            s->cond = parse_expr();
            expect_punct(")");
            expect_punct(";");
            return s;
        }
        if (at_ident("loop")) {
            s->kind = Stmt::Kind::Loop;
            advance();
            s->body = parse_block();
            return s;
        }
        if (at_ident("break")) {
            s->kind = Stmt::Kind::Break;
            advance();
            expect_punct(";");
            return s;
        }
        if (at_ident("continue")) {
            s->kind = Stmt::Kind::Continue;
            advance();
            expect_punct(";");
            return s;
        }
        if (at_ident("return")) {
            s->kind = Stmt::Kind::Return;
            advance();
            if (!at_punct(";")) s->expr = parse_expr();
            expect_punct(";");
            return s;
        }
        if (at_ident("asm")) {
            s->kind = Stmt::Kind::InlineAsm;
            advance();
            // raw capture up to the closing brace
            if (!at_punct("{")) fail("expected '{' after asm");
            size_t start = lex.i;
            int depth = 1;
            while (lex.i < lex.src.size() && depth > 0) {
                char c = lex.src[lex.i];
                if (c == '{') depth++;
                if (c == '}') depth--;
                if (depth > 0) lex.advance();
            }
            s->asm_text = lex.src.substr(start, lex.i - start);
            if (lex.i < lex.src.size()) lex.advance();  // '}'
            advance();
            return s;
        }
        if (peek_type()) {
            s->kind = Stmt::Kind::Decl;
            s->decl = parse_decl_head();
            if (at_punct("=")) {
                advance();
                if (s->decl.is_array || tok.kind == Token::Kind::Str ||
                    tok.kind == Token::Kind::HexStr || at_punct("{")) {
                    parse_initializer(s->decl);
                } else {
                    // scalar locals may initialize from an expression; a plain
                    // constant stays a constant initializer
                    ExprPtr e = parse_expr();
                    if (e->kind == Expr::Kind::Const)
                        s->decl.init = mask_width(e->value, s->decl.type.width_bytes
                                                                ? s->decl.type.width_bytes
                                                                : 8);
                    else
                        s->decl_init = std::move(e);
                }
            }
            if (s->decl.is_array && s->decl.array_len == 0)
                fail("array '" + s->decl.name + "' needs a length or an initializer");
            expect_punct(";");
            return s;
        }
        s = parse_simple_stmt();
        expect_punct(";");
        return s;
    }

    // assignment or call, no trailing ';'
    StmtPtr parse_simple_stmt() {
        auto s = std::make_unique<Stmt>();
        s->loc = tok.loc;
        ExprPtr e = parse_postfix();
        if (at_punct("=")) {
            advance();
            s->kind = Stmt::Kind::Assign;
            s->lhs = std::move(e);
            s->rhs = parse_expr();
            return s;
        }
        if (e->kind != Expr::Kind::Call) fail("expected '=' or a call statement");
        s->kind = Stmt::Kind::CallStmt;
        s->expr = std::move(e);
        return s;
    }

    // precedence: | < & < (== !=) < (>= <) < (+ -) < * < unary
    ExprPtr parse_expr() { return parse_or(); }
    ExprPtr parse_or() { return parse_binary_level(0); }

    ExprPtr parse_binary_level(int level) {
        static const std::vector<std::vector<std::string>> levels = {
            {"|"}, {"&"}, {"==", "!="}, {">=", "<"}, {"+", "-"}, {"*"}};
        if (level >= static_cast<int>(levels.size())) return parse_unary();
        ExprPtr lhs = parse_binary_level(level + 1);
        for (;;) {
            bool matched = false;
            for (const auto& op : levels[level]) {
                if (at_punct(op)) {
                    Loc loc = tok.loc;
                    advance();
                    auto e = std::make_unique<Expr>();
                    e->kind = Expr::Kind::Binary;
                    e->loc = loc;
                    e->binop = op;
                    e->a = std::move(lhs);
                    e->b = parse_binary_level(level + 1);
                    lhs = std::move(e);
                    matched = true;
                    break;
                }
            }
            if (!matched) return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (at_punct("-") || at_punct("!")) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Unary;
            e->loc = tok.loc;
            e->unop = tok.text[0];
            advance();
            e->a = parse_unary();
            return e;
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        auto e = std::make_unique<Expr>();
        e->loc = tok.loc;
        if (tok.kind == Token::Kind::Int) {
            e->kind = Expr::Kind::Const;
            e->value = tok.value;
            advance();
            return e;
        }
        if (at_punct("(")) {
            advance();
            e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (at_ident("signed")) {
            advance();
            expect_punct("(");
            e->kind = Expr::Kind::SignedCast;
            e->a = parse_expr();
            expect_punct(")");
            return e;
        }
        if (at_ident("mem")) {
            advance();
            expect_punct("<");
            auto t = peek_type();
            if (!t) fail("expected element type in mem<...>");
            advance();
            expect_punct(">");
            expect_punct("[");
            e->kind = Expr::Kind::Deref;
            e->elem = *t;
            e->a = parse_expr();
            expect_punct("]");
            return e;
        }
        if (tok.kind == Token::Kind::Ident && !kKeywords.count(tok.text)) {
            e->name = tok.text;
            advance();
            if (at_punct("(")) {
                advance();
                e->kind = Expr::Kind::Call;
                while (!at_punct(")")) {
                    e->args.push_back(parse_expr());
                    if (at_punct(",")) advance();
                    else break;
                }
                expect_punct(")");
                return e;
            }
            if (at_punct("[")) {
                advance();
                e->kind = Expr::Kind::Index;
                e->a = parse_expr();
                expect_punct("]");
                return e;
            }
            e->kind = Expr::Kind::Var;
            return e;
        }
        fail("expected expression");
    }
};

// ---- checker ---------------------------------------------------------------

struct Checker {
    PayloadAst& ast;
    std::vector<Diag> diags;
    std::map<std::string, const ProcDecl*> procs;
    // scope: name -> (type, is_array)
    std::vector<std::map<std::string, std::pair<TypeTag, bool>>> scopes;
    const ProcDecl* current = nullptr;
    int loop_depth = 0;

    void err(Loc loc, const std::string& m) { diags.push_back({loc.line, loc.col, m}); }

    bool declared(const std::string& n) const {
        for (const auto& s : scopes)
            if (s.count(n)) return true;
        return false;
    }
    const std::pair<TypeTag, bool>* find(const std::string& n) const {
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
            if (auto f = it->find(n); f != it->end()) return &f->second;
        return nullptr;
    }

    void declare(const VarDecl& d) {
        if (declared(d.name) || procs.count(d.name))
            err(d.loc, "duplicate declaration of '" + d.name + "'");
        scopes.back()[d.name] = {d.type, d.is_array};
        if (d.const_initialized) {
            std::string len = d.name + "_len";
            if (declared(len))
                err(d.loc, "duplicate declaration of '" + len + "' (automatic length constant)");
            scopes.back()[len] = {TypeTag::int32_(), false};
        }
    }

    void run() {
        for (const auto& p : ast.procedures) {
            if (procs.count(p.name)) err(p.loc, "duplicate procedure '" + p.name + "'");
            procs[p.name] = &p;
        }
        scopes.emplace_back();
        scopes.back()["addr_size"] = {TypeTag::int32_(), false};  // width of addr on the target
        for (const auto& g : ast.globals) declare(g);
        for (const auto& p : ast.procedures) check_proc(p);
        if (!procs.count(ast.entry)) {
            err({1, 1}, "missing entry procedure '" + ast.entry + "'");
        } else {
            const ProcDecl* m = procs[ast.entry];
            if (!m->params.empty()) err(m->loc, "entry procedure takes no parameters");
        }
        check_recursion();
        if (!diags.empty()) throw Error(Stage::Parse, diags);
    }

    void check_proc(const ProcDecl& p) {
        current = &p;
        scopes.emplace_back();
        for (const auto& [t, n] : p.params) {
            VarDecl d;
            d.type = t;
            d.name = n;
            d.loc = p.loc;
            declare(d);
        }
        check_block(p.body);
        scopes.pop_back();
        current = nullptr;
    }

    void check_block(const std::vector<StmtPtr>& body) {
        scopes.emplace_back();
        for (const auto& s : body) check_stmt(*s);
        scopes.pop_back();
    }

    void check_stmt(Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::Decl:
                if (s.decl.input) err(s.decl.loc, "'input' is only valid at file scope");
                if (s.decl_init) check_expr(*s.decl_init);
                declare(s.decl);
                break;
            case Stmt::Kind::Assign: {
                TypeTag lt = check_lvalue(*s.lhs);
                check_expr(*s.rhs);
                (void)lt;
                break;
            }
            case Stmt::Kind::If:
                check_expr(*s.cond);
                check_block(s.body);
                check_block(s.else_body);
                break;
            case Stmt::Kind::While:
                check_expr(*s.cond);
                loop_depth++;
                check_block(s.body);
                loop_depth--;
                break;
            case Stmt::Kind::For:
                scopes.emplace_back();
                if (s.init) check_stmt(*s.init);
                if (s.cond) check_expr(*s.cond);
                if (s.step) check_stmt(*s.step);
                loop_depth++;
                check_block(s.body);
                loop_depth--;
                scopes.pop_back();
                break;
            case Stmt::Kind::RepeatUntil:
                loop_depth++;
                check_block(s.body);
                loop_depth--;
                check_expr(*s.cond);
                break;
            case Stmt::Kind::Loop:
                loop_depth++;
                check_block(s.body);
                loop_depth--;
                break;
            case Stmt::Kind::Break:
            case Stmt::Kind::Continue:
                if (!loop_depth)
                    err(s.loc, s.kind == Stmt::Kind::Break ? "break outside a loop"
                                                           : "continue outside a loop");
                break;
            case Stmt::Kind::CallStmt:
                check_expr(*s.expr);
                break;
            case Stmt::Kind::Return:
                if (!current) break;
                if (current->return_type && !s.expr)
                    err(s.loc, "'" + current->name + "' must return a value");
                if (!current->return_type && s.expr)
                    err(s.loc, "'" + current->name + "' does not return a value");
                if (s.expr) check_expr(*s.expr);
                break;
            case Stmt::Kind::InlineAsm:
                break;  // spliced verbatim; validated after compilation
        }
    }

    TypeTag check_lvalue(Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Var: {
                const auto* v = find(e.name);
                if (!v) {
                    err(e.loc, "undeclared identifier '" + e.name + "'");
                    return e.type = TypeTag::int32_();
                }
                if (v->second) err(e.loc, "cannot assign a whole array");
                return e.type = v->first;
            }
            case Expr::Kind::Index:
            case Expr::Kind::Deref:
                return check_expr(e);
            default:
                err(e.loc, "expression is not assignable");
                return e.type = TypeTag::int32_();
        }
    }

    TypeTag wider(TypeTag a, TypeTag b) {
        auto rank = [](const TypeTag& t) {
            return t.kind == TypeKind::Addr ? 100 : t.width_bytes;
        };
        return rank(a) >= rank(b) ? a : b;
    }

    TypeTag check_expr(Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Const:
                return e.type = e.value > 0xFFFFFFFFull ? TypeTag::int64_() : TypeTag::int32_();
            case Expr::Kind::Var: {
                const auto* v = find(e.name);
                if (!v) {
                    err(e.loc, "undeclared identifier '" + e.name + "'");
                    return e.type = TypeTag::int32_();
                }
                if (v->second) err(e.loc, "array '" + e.name + "' needs an index");
                return e.type = v->first;
            }
            case Expr::Kind::Index: {
                const auto* v = find(e.name);
                if (!v) {
                    err(e.loc, "undeclared identifier '" + e.name + "'");
                    return e.type = TypeTag::int32_();
                }
                if (!v->second) err(e.loc, "'" + e.name + "' is not an array");
                check_expr(*e.a);
                e.elem = v->first;
                return e.type = v->first;
            }
            case Expr::Kind::Deref:
                check_expr(*e.a);
                return e.type = e.elem;
            case Expr::Kind::Unary:
                check_expr(*e.a);
                return e.type = e.a->type;
            case Expr::Kind::SignedCast:
                check_expr(*e.a);
                return e.type = e.a->type;
            case Expr::Kind::Binary: {
                TypeTag a = check_expr(*e.a);
                TypeTag b = check_expr(*e.b);
                if (e.binop == "==" || e.binop == "!=" || e.binop == ">=" || e.binop == "<")
                    return e.type = TypeTag::int32_();
                return e.type = wider(a, b);
            }
            case Expr::Kind::Call: {
                auto it = procs.find(e.name);
                if (it == procs.end()) {
                    err(e.loc, "undeclared procedure '" + e.name + "'");
                    return e.type = TypeTag::int32_();
                }
                const ProcDecl* p = it->second;
                if (e.args.size() != p->params.size())
                    err(e.loc, "'" + e.name + "' expects " + std::to_string(p->params.size()) +
                                   " argument(s)");
                for (auto& a : e.args) check_expr(*a);
                return e.type = p->return_type.value_or(TypeTag::int32_());
            }
        }
        return TypeTag::int32_();
    }

    void collect_calls(const std::vector<StmtPtr>& body, std::set<std::string>& out) {
        std::function<void(const Expr&)> walk_expr = [&](const Expr& e) {
            if (e.kind == Expr::Kind::Call) out.insert(e.name);
            if (e.a) walk_expr(*e.a);
            if (e.b) walk_expr(*e.b);
            for (const auto& a : e.args) walk_expr(*a);
        };
        std::function<void(const Stmt&)> walk = [&](const Stmt& s) {
            if (s.lhs) walk_expr(*s.lhs);
            if (s.rhs) walk_expr(*s.rhs);
            if (s.cond) walk_expr(*s.cond);
            if (s.expr) walk_expr(*s.expr);
            if (s.init) walk(*s.init);
            if (s.step) walk(*s.step);
            for (const auto& b : s.body) walk(*b);
            for (const auto& b : s.else_body) walk(*b);
        };
        for (const auto& s : body) walk(*s);
    }

    void check_recursion() {
        std::map<std::string, std::set<std::string>> calls;
        for (const auto& p : ast.procedures) collect_calls(p.body, calls[p.name]);
        std::set<std::string> done, path;
        std::function<void(const std::string&)> dfs = [&](const std::string& n) {
            if (done.count(n)) return;
            if (path.count(n)) {
                const ProcDecl* p = procs.count(n) ? procs[n] : nullptr;
                err(p ? p->loc : Loc{}, "recursive call involving '" + n + "'");
                return;
            }
            path.insert(n);
            for (const auto& c : calls[n])
                if (procs.count(c)) dfs(c);
            path.erase(n);
            done.insert(n);
        };
        for (const auto& p : ast.procedures) dfs(p.name);
    }
};

}  // namespace

PayloadAst parse_payload(const std::string& source) {
    Parser p(source);
    PayloadAst ast = p.parse();
    Checker c{ast, {}, {}, {}, nullptr, 0};
    c.run();
    return ast;
}

}  // namespace dopc::slang
