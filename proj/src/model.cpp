#include "lbms/model.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace lbms::model {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string &message, const std::string &source) :
    Error((source.empty() ? "" : source + ":") + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
    line_(line),
    column_(column),
    message_(message),
    source_(source)
{
}

const StepBlock *ModelDocument::find_step(std::string_view label) const
{
    for (const auto &s : steps)
        if (s.label == label)
            return &s;
    return nullptr;
}

namespace {

bool word_char(char c)
{
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '+' || u >= 0x80;
}

struct Token {
    enum class Kind { Word, Symbol, End } kind = Kind::End;
    std::string_view text;
    std::size_t column = 0;
};

class Lexer {
public:
    Lexer(std::string_view text, std::size_t line) : text_(text), line_(line)
    {
        if (auto hash = text_.find('#'); hash != std::string_view::npos)
            text_ = text_.substr(0, hash);
        advance();
    }

    const Token &peek() const { return tok_; }
    std::size_t line() const { return line_; }

    Token next()
    {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const Token &t, const std::string &msg) const
    {
        throw ParseError(line_, t.column, msg);
    }

    std::string_view word(const char *what)
    {
        if (tok_.kind != Token::Kind::Word)
            fail(tok_, std::string("expected ") + what + describe(tok_));
        return next().text;
    }

    void expect(char c)
    {
        if (tok_.kind != Token::Kind::Symbol || tok_.text[0] != c)
            fail(tok_, std::string("expected '") + c + "'" + describe(tok_));
        next();
    }

    bool accept(char c)
    {
        if (tok_.kind == Token::Kind::Symbol && tok_.text[0] == c) {
            next();
            return true;
        }
        return false;
    }

    void finish()
    {
        if (tok_.kind != Token::Kind::End)
            fail(tok_, "unexpected '" + std::string(tok_.text) + "' after directive");
    }

    static std::string describe(const Token &t)
    {
        if (t.kind == Token::Kind::End)
            return " at end of line";
        return ", found '" + std::string(t.text) + "'";
    }

    /// Remaining text from the current token, trimmed.
    std::string_view rest()
    {
        if (tok_.kind == Token::Kind::End)
            return {};
        auto r = text_.substr(tok_.column - 1);
        while (!r.empty() && std::isspace(static_cast<unsigned char>(r.back())))
            r.remove_suffix(1);
        pos_ = text_.size();
        tok_ = Token{Token::Kind::End, {}, text_.size() + 1};
        return r;
    }

private:
    void advance()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ >= text_.size()) {
            tok_ = Token{Token::Kind::End, {}, pos_ + 1};
            return;
        }
        std::size_t start = pos_;
        if (word_char(text_[pos_])) {
            while (pos_ < text_.size() && word_char(text_[pos_]))
                ++pos_;
            tok_ = Token{Token::Kind::Word, text_.substr(start, pos_ - start), start + 1};
            return;
        }
        static constexpr std::string_view symbols = "{}=|^:[],";
        if (symbols.find(text_[pos_]) == std::string_view::npos)
            throw ParseError(line_, start + 1, "unexpected character '" + std::string(1, text_[pos_]) + "'");
        ++pos_;
        tok_ = Token{Token::Kind::Symbol, text_.substr(start, 1), start + 1};
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
    Token tok_;
};

double number(Lexer &lx)
{
    const Token t = lx.peek();
    auto text = lx.word("a probability");
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        lx.fail(t, "'" + std::string(text) + "' is not a number");
    if (!(v >= 0.0 && v <= 1.0))
        lx.fail(t, "probability " + std::string(text) + " outside [0, 1]");
    return v;
}

IntervalProb interval(Lexer &lx)
{
    const Token open = lx.peek();
    if (!lx.accept('[')) {
        double p = number(lx);
        return IntervalProb::point(p);
    }
    double lo = number(lx);
    lx.accept(',');
    double hi = number(lx);
    lx.expect(']');
    if (lo > hi)
        lx.fail(open, "interval lower bound exceeds upper bound");
    return {lo, hi};
}

ibn::StateRef state_ref(Lexer &lx)
{
    ibn::StateRef r;
    r.variable = lx.word("a variable name");
    lx.expect('=');
    r.state = lx.word("a state name");
    return r;
}

} // namespace

std::optional<Directive> parse_directive(std::string_view text, std::size_t line)
{
    Lexer lx(text, line);
    if (lx.peek().kind == Token::Kind::End)
        return std::nullopt;
    const Token head = lx.peek();
    if (head.kind != Token::Kind::Word)
        lx.fail(head, "expected a directive" + Lexer::describe(head));
    auto keyword = lx.next().text;

    if (keyword == "variable") {
        ibn::VariableDecl v;
        v.name = lx.word("a variable name");
        lx.expect('{');
        while (lx.peek().kind == Token::Kind::Word)
            v.states.emplace_back(lx.next().text);
        const Token close = lx.peek();
        lx.expect('}');
        if (v.states.empty())
            lx.fail(close, "variable '" + v.name + "' declares no states");
        lx.finish();
        return v;
    }
    if (keyword == "conditional") {
        ibn::ConditionalDecl c;
        c.child = state_ref(lx);
        lx.expect('|');
        c.parents.push_back(state_ref(lx));
        while (lx.accept('^'))
            c.parents.push_back(state_ref(lx));
        lx.expect(':');
        c.prob = interval(lx);
        lx.finish();
        return c;
    }
    if (keyword == "prior") {
        ibn::PriorDecl p;
        p.state = state_ref(lx);
        lx.expect(':');
        p.prob = interval(lx);
        lx.finish();
        return p;
    }
    if (keyword == "step") {
        const Token t = lx.peek();
        auto label = lx.rest();
        if (label.empty())
            lx.fail(t, "step needs a label");
        return StepDirective{std::string(label)};
    }
    lx.fail(head, "unknown directive '" + std::string(keyword) + "'");
}

ModelDocument parse_model(std::string_view text)
{
    ModelDocument doc;
    ibn::NetworkModel *current = &doc.preamble;
    std::size_t line = 0;
    while (!text.empty()) {
        ++line;
        auto nl = text.find('\n');
        auto row = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!row.empty() && row.back() == '\r')
            row.remove_suffix(1);
        auto d = parse_directive(row, line);
        if (!d)
            continue;
        std::visit(
            [&](auto &&x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, ibn::VariableDecl>)
                    current->variables.push_back(std::move(x));
                else if constexpr (std::is_same_v<T, ibn::ConditionalDecl>)
                    current->conditionals.push_back(std::move(x));
                else if constexpr (std::is_same_v<T, ibn::PriorDecl>)
                    current->priors.push_back(std::move(x));
                else {
                    doc.steps.push_back(StepBlock{std::move(x.label), {}});
                    current = &doc.steps.back().model;
                }
            },
            *d);
    }
    return doc;
}

namespace {

std::string shortest(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string ref_text(const ibn::StateRef &r)
{
    return r.variable + "=" + r.state;
}

void print_block(std::ostringstream &os, const ibn::NetworkModel &m)
{
    for (const auto &v : m.variables)
        os << print_directive(v) << "\n";
    for (const auto &c : m.conditionals)
        os << print_directive(c) << "\n";
    for (const auto &p : m.priors)
        os << print_directive(p) << "\n";
}

} // namespace

std::string print_interval(const IntervalProb &p)
{
    return "[" + shortest(p.lo()) + ", " + shortest(p.hi()) + "]";
}

std::string print_directive(const Directive &d)
{
    return std::visit(
        [](auto &&x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ibn::VariableDecl>) {
                std::string out = "variable " + x.name + " {";
                for (const auto &s : x.states)
                    out += " " + s;
                return out + " }";
            } else if constexpr (std::is_same_v<T, ibn::ConditionalDecl>) {
                std::string out = "conditional " + ref_text(x.child) + " |";
                for (std::size_t i = 0; i < x.parents.size(); ++i)
                    out += (i ? " ^ " : " ") + ref_text(x.parents[i]);
                return out + " : " + print_interval(x.prob);
            } else if constexpr (std::is_same_v<T, ibn::PriorDecl>) {
                return "prior " + ref_text(x.state) + " : " + print_interval(x.prob);
            } else {
                return "step " + x.label;
            }
        },
        d);
}

std::string print_model(const ModelDocument &doc)
{
    std::ostringstream os;
    print_block(os, doc.preamble);
    for (const auto &s : doc.steps) {
        os << "\nstep " << s.label << "\n";
        print_block(os, s.model);
    }
    return os.str();
}

ibn::StateRef parse_state_ref(std::string_view text, std::size_t line)
{
    Lexer lx(text, line);
    auto r = state_ref(lx);
    lx.finish();
    return r;
}

Expectation parse_expectation(std::string_view line_text, std::size_t line)
{
    Lexer lx(line_text, line);
    const Token head = lx.peek();
    if (lx.word("'expect'") != "expect")
        lx.fail(head, "expected 'expect'");
    Expectation e;
    e.state = state_ref(lx);
    lx.expect(':');
    e.prob = interval(lx);
    if (lx.peek().kind == Token::Kind::Word && lx.peek().text == "tol") {
        lx.next();
        e.tolerance = number(lx);
    }
    lx.finish();
    return e;
}

IntervalProb parse_interval(std::string_view text, std::size_t line)
{
    Lexer lx(text, line);
    auto p = interval(lx);
    lx.finish();
    return p;
}

} // namespace lbms::model
