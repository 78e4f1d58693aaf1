#include "selfref/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

namespace selfref {

// ---------- Term construction ----------

namespace {

TermPtr make_term(Term::Kind k, std::size_t index, TermPtr a, TermPtr b) {
    auto t = std::make_shared<Term>();
    auto* m = const_cast<Term*>(t.get());
    m->kind = k;
    m->index = index;
    m->a = std::move(a);
    m->b = std::move(b);
    std::size_t fv = 0;
    if (k == Term::Kind::Var) fv = index + 1;
    if (m->a) fv = std::max(fv, m->a->fv_bound);
    if (m->b) fv = std::max(fv, m->b->fv_bound);
    m->fv_bound = fv;
    return t;
}

}  // namespace

Term::~Term() {
    // Numeral terms form chains ~1e6 nodes deep; default recursive
    // destruction would blow the stack.
    std::vector<TermPtr> work;
    auto take = [&](TermPtr& c) {
        if (c && c.use_count() == 1) work.push_back(std::move(c));
        c.reset();
    };
    take(a);
    take(b);
    while (!work.empty()) {
        TermPtr p = std::move(work.back());
        work.pop_back();
        auto* m = const_cast<Term*>(p.get());
        take(m->a);
        take(m->b);
    }
}

TermPtr term_zero() {
    static const TermPtr zero = make_term(Term::Kind::Zero, 0, nullptr, nullptr);
    return zero;
}
TermPtr term_succ(TermPtr t) { return make_term(Term::Kind::Succ, 0, std::move(t), nullptr); }
TermPtr term_add(TermPtr a, TermPtr b) { return make_term(Term::Kind::Add, 0, std::move(a), std::move(b)); }
TermPtr term_mul(TermPtr a, TermPtr b) { return make_term(Term::Kind::Mul, 0, std::move(a), std::move(b)); }
TermPtr term_var(std::size_t index) { return make_term(Term::Kind::Var, index, nullptr, nullptr); }
TermPtr term_diag(TermPtr t) { return make_term(Term::Kind::Diag, 0, std::move(t), nullptr); }

bool term_closed(const TermPtr& t) { return t->fv_bound == 0; }

bool equal(const TermPtr& s, const TermPtr& t) {
    // Iterative: terms can be deeper than the call stack allows.
    std::vector<std::pair<const Term*, const Term*>> work{{s.get(), t.get()}};
    while (!work.empty()) {
        auto [x, y] = work.back();
        work.pop_back();
        if (x == y) continue;
        if (!x || !y) return false;
        if (x->kind != y->kind || x->index != y->index || x->fv_bound != y->fv_bound)
            return false;
        work.emplace_back(x->a.get(), y->a.get());
        work.emplace_back(x->b.get(), y->b.get());
    }
    return true;
}

TermPtr shift_term(const TermPtr& t, std::size_t delta, std::size_t cutoff) {
    if (delta == 0 || t->fv_bound <= cutoff) return t;
    switch (t->kind) {
        case Term::Kind::Var:
            return t->index >= cutoff ? term_var(t->index + delta) : t;
        case Term::Kind::Succ: return term_succ(shift_term(t->a, delta, cutoff));
        case Term::Kind::Diag: return term_diag(shift_term(t->a, delta, cutoff));
        case Term::Kind::Add:
            return term_add(shift_term(t->a, delta, cutoff), shift_term(t->b, delta, cutoff));
        case Term::Kind::Mul:
            return term_mul(shift_term(t->a, delta, cutoff), shift_term(t->b, delta, cutoff));
        default: return t;
    }
}

namespace {

// Replace Var(depth + slot) by repl shifted to `depth`. Other free
// variables are untouched (callers check the free-variable contract).
TermPtr subst_term_at(const TermPtr& t, std::size_t slot, const TermPtr& repl, std::size_t depth) {
    if (t->fv_bound <= depth + slot) return t;
    switch (t->kind) {
        case Term::Kind::Var:
            if (t->index == depth + slot) return shift_term(repl, depth);
            return t;
        case Term::Kind::Succ: return term_succ(subst_term_at(t->a, slot, repl, depth));
        case Term::Kind::Diag: return term_diag(subst_term_at(t->a, slot, repl, depth));
        case Term::Kind::Add:
            return term_add(subst_term_at(t->a, slot, repl, depth),
                            subst_term_at(t->b, slot, repl, depth));
        case Term::Kind::Mul:
            return term_mul(subst_term_at(t->a, slot, repl, depth),
                            subst_term_at(t->b, slot, repl, depth));
        default: return t;
    }
}

}  // namespace

TermPtr subst_term(const TermPtr& t, std::size_t target, const TermPtr& repl) {
    return subst_term_at(t, target, repl, 0);
}

bool contains_diag(const TermPtr& t) {
    std::vector<const Term*> work{t.get()};
    while (!work.empty()) {
        const Term* x = work.back();
        work.pop_back();
        if (!x) continue;
        if (x->kind == Term::Kind::Diag) return true;
        work.push_back(x->a.get());
        work.push_back(x->b.get());
    }
    return false;
}

// ---------- Formula construction ----------

namespace {

ArithPtr make_formula(ArithFormula::Kind k, TermPtr t1, TermPtr t2, std::string tag,
                      ArithPtr f1, ArithPtr f2) {
    auto f = std::make_shared<ArithFormula>();
    auto* m = const_cast<ArithFormula*>(f.get());
    m->kind = k;
    m->t1 = std::move(t1);
    m->t2 = std::move(t2);
    m->tag = std::move(tag);
    m->f1 = std::move(f1);
    m->f2 = std::move(f2);
    std::size_t fv = 0;
    if (m->t1) fv = std::max(fv, m->t1->fv_bound);
    if (m->t2) fv = std::max(fv, m->t2->fv_bound);
    bool binder = k == ArithFormula::Kind::Forall || k == ArithFormula::Kind::Exists ||
                  k == ArithFormula::Kind::BoundedForall || k == ArithFormula::Kind::BoundedExists;
    if (m->f1) {
        std::size_t b = m->f1->fv_bound;
        if (binder) b = b > 0 ? b - 1 : 0;
        fv = std::max(fv, b);
    }
    if (m->f2) fv = std::max(fv, m->f2->fv_bound);
    m->fv_bound = fv;
    return f;
}

}  // namespace

ArithPtr fa_eq(TermPtr a, TermPtr b) {
    return make_formula(ArithFormula::Kind::Eq, std::move(a), std::move(b), "", nullptr, nullptr);
}
ArithPtr fa_pr(std::string tag, TermPtr t) {
    return make_formula(ArithFormula::Kind::Pr, std::move(t), nullptr, std::move(tag), nullptr, nullptr);
}
ArithPtr fa_not(ArithPtr f) {
    return make_formula(ArithFormula::Kind::Not, nullptr, nullptr, "", std::move(f), nullptr);
}
ArithPtr fa_and(ArithPtr a, ArithPtr b) {
    return make_formula(ArithFormula::Kind::And, nullptr, nullptr, "", std::move(a), std::move(b));
}
ArithPtr fa_or(ArithPtr a, ArithPtr b) {
    return make_formula(ArithFormula::Kind::Or, nullptr, nullptr, "", std::move(a), std::move(b));
}
ArithPtr fa_implies(ArithPtr a, ArithPtr b) {
    return make_formula(ArithFormula::Kind::Implies, nullptr, nullptr, "", std::move(a), std::move(b));
}
ArithPtr fa_iff(ArithPtr a, ArithPtr b) {
    return make_formula(ArithFormula::Kind::Iff, nullptr, nullptr, "", std::move(a), std::move(b));
}
ArithPtr fa_forall(ArithPtr body) {
    return make_formula(ArithFormula::Kind::Forall, nullptr, nullptr, "", std::move(body), nullptr);
}
ArithPtr fa_exists(ArithPtr body) {
    return make_formula(ArithFormula::Kind::Exists, nullptr, nullptr, "", std::move(body), nullptr);
}
ArithPtr fa_bounded_forall(TermPtr bound, ArithPtr body) {
    return make_formula(ArithFormula::Kind::BoundedForall, std::move(bound), nullptr, "",
                        std::move(body), nullptr);
}
ArithPtr fa_bounded_exists(TermPtr bound, ArithPtr body) {
    return make_formula(ArithFormula::Kind::BoundedExists, std::move(bound), nullptr, "",
                        std::move(body), nullptr);
}

bool equal(const ArithPtr& f, const ArithPtr& g) {
    if (f.get() == g.get()) return true;
    if (!f || !g) return false;
    if (f->kind != g->kind || f->tag != g->tag || f->fv_bound != g->fv_bound) return false;
    if ((f->t1 != nullptr) != (g->t1 != nullptr)) return false;
    if (f->t1 && !equal(f->t1, g->t1)) return false;
    if ((f->t2 != nullptr) != (g->t2 != nullptr)) return false;
    if (f->t2 && !equal(f->t2, g->t2)) return false;
    if ((f->f1 != nullptr) != (g->f1 != nullptr)) return false;
    if (f->f1 && !equal(f->f1, g->f1)) return false;
    if ((f->f2 != nullptr) != (g->f2 != nullptr)) return false;
    if (f->f2 && !equal(f->f2, g->f2)) return false;
    return true;
}

bool is_sentence(const ArithPtr& f) { return f->fv_bound == 0; }

namespace {

bool is_binder(ArithFormula::Kind k) {
    return k == ArithFormula::Kind::Forall || k == ArithFormula::Kind::Exists ||
           k == ArithFormula::Kind::BoundedForall || k == ArithFormula::Kind::BoundedExists;
}

void collect_free_term(const TermPtr& t, std::size_t depth, std::set<std::size_t>& out) {
    if (t->fv_bound <= depth) return;
    if (t->kind == Term::Kind::Var) {
        if (t->index >= depth) out.insert(t->index - depth);
        return;
    }
    if (t->a) collect_free_term(t->a, depth, out);
    if (t->b) collect_free_term(t->b, depth, out);
}

void collect_free(const ArithPtr& f, std::size_t depth, std::set<std::size_t>& out) {
    if (f->fv_bound <= depth) return;
    if (f->t1) collect_free_term(f->t1, depth, out);
    if (f->t2) collect_free_term(f->t2, depth, out);
    std::size_t d = depth + (is_binder(f->kind) ? 1 : 0);
    if (f->f1) collect_free(f->f1, d, out);
    if (f->f2) collect_free(f->f2, depth, out);
}

}  // namespace

std::set<std::size_t> free_vars(const ArithPtr& f) {
    std::set<std::size_t> out;
    collect_free(f, 0, out);
    return out;
}

namespace {

ArithPtr subst_formula_at(const ArithPtr& f, std::size_t slot, const TermPtr& repl,
                          std::size_t depth) {
    if (f->fv_bound <= depth + slot) return f;
    TermPtr t1 = f->t1 ? subst_term_at(f->t1, slot, repl, depth) : nullptr;
    TermPtr t2 = f->t2 ? subst_term_at(f->t2, slot, repl, depth) : nullptr;
    std::size_t d = depth + (is_binder(f->kind) ? 1 : 0);
    ArithPtr f1 = f->f1 ? subst_formula_at(f->f1, slot, repl, d) : nullptr;
    ArithPtr f2 = f->f2 ? subst_formula_at(f->f2, slot, repl, depth) : nullptr;
    return make_formula(f->kind, std::move(t1), std::move(t2), f->tag, std::move(f1),
                        std::move(f2));
}

}  // namespace

ArithPtr substitute(const ArithPtr& f, const TermPtr& t) {
    auto fv = free_vars(f);
    if (fv.empty()) throw std::invalid_argument("substitute: formula is closed");
    if (fv.size() > 1) throw std::invalid_argument("substitute: formula has more than one free variable");
    if (*fv.begin() != 0)
        throw std::invalid_argument("substitute: the free variable must be slot 0 (surface name x)");
    if (!term_closed(t)) throw std::invalid_argument("substitute: replacement term is not closed");
    return subst_formula_at(f, 0, t, 0);
}

// Used by the diagonal module, where the replacement is diag(x) and stays open.
ArithPtr substitute_open(const ArithPtr& f, const TermPtr& repl) {
    return subst_formula_at(f, 0, repl, 0);
}

ArithPtr shift_formula(const ArithPtr& f, std::size_t delta, std::size_t cutoff) {
    if (delta == 0 || f->fv_bound <= cutoff) return f;
    TermPtr t1 = f->t1 ? shift_term(f->t1, delta, cutoff) : nullptr;
    TermPtr t2 = f->t2 ? shift_term(f->t2, delta, cutoff) : nullptr;
    std::size_t c = cutoff + (is_binder(f->kind) ? 1 : 0);
    ArithPtr f1 = f->f1 ? shift_formula(f->f1, delta, c) : nullptr;
    ArithPtr f2 = f->f2 ? shift_formula(f->f2, delta, cutoff) : nullptr;
    return make_formula(f->kind, std::move(t1), std::move(t2), f->tag, std::move(f1),
                        std::move(f2));
}

bool contains_pr(const ArithPtr& f) {
    if (f->kind == ArithFormula::Kind::Pr) return true;
    if (f->f1 && contains_pr(f->f1)) return true;
    if (f->f2 && contains_pr(f->f2)) return true;
    return false;
}

bool contains_diag(const ArithPtr& f) {
    if (f->t1 && contains_diag(f->t1)) return true;
    if (f->t2 && contains_diag(f->t2)) return true;
    if (f->f1 && contains_diag(f->f1)) return true;
    if (f->f2 && contains_diag(f->f2)) return true;
    return false;
}

// ---------- Classification ----------

std::string to_string(SyntacticClass c) {
    switch (c) {
        case SyntacticClass::Delta0: return "Delta0";
        case SyntacticClass::Sigma1: return "Sigma1";
        case SyntacticClass::Pi1: return "Pi1";
        case SyntacticClass::Sigma2: return "Sigma2";
        case SyntacticClass::Pi2: return "Pi2";
        case SyntacticClass::Other: return "Other";
    }
    return "Other";
}

namespace {

bool is_delta0(const ArithPtr& f) {
    switch (f->kind) {
        case ArithFormula::Kind::Eq: return true;
        case ArithFormula::Kind::Pr: return false;
        case ArithFormula::Kind::Forall:
        case ArithFormula::Kind::Exists: return false;
        case ArithFormula::Kind::BoundedForall:
        case ArithFormula::Kind::BoundedExists: return is_delta0(f->f1);
        case ArithFormula::Kind::Not: return is_delta0(f->f1);
        default: return is_delta0(f->f1) && is_delta0(f->f2);
    }
}

// Strips a nonempty block of the given quantifier; true if at least one.
const ArithFormula* strip_block(const ArithPtr& f, ArithFormula::Kind q, bool& any) {
    const ArithFormula* cur = f.get();
    any = false;
    while (cur->kind == q) {
        any = true;
        cur = cur->f1.get();
    }
    return cur;
}

bool is_delta0_raw(const ArithFormula* f) {
    // same as is_delta0 but on a raw pointer into an existing tree
    switch (f->kind) {
        case ArithFormula::Kind::Eq: return true;
        case ArithFormula::Kind::Pr: return false;
        case ArithFormula::Kind::Forall:
        case ArithFormula::Kind::Exists: return false;
        case ArithFormula::Kind::BoundedForall:
        case ArithFormula::Kind::BoundedExists: return is_delta0_raw(f->f1.get());
        case ArithFormula::Kind::Not: return is_delta0_raw(f->f1.get());
        default: return is_delta0_raw(f->f1.get()) && is_delta0_raw(f->f2.get());
    }
}

SyntacticClass dual_class(SyntacticClass c) {
    switch (c) {
        case SyntacticClass::Sigma1: return SyntacticClass::Pi1;
        case SyntacticClass::Pi1: return SyntacticClass::Sigma1;
        case SyntacticClass::Sigma2: return SyntacticClass::Pi2;
        case SyntacticClass::Pi2: return SyntacticClass::Sigma2;
        default: return c;
    }
}

}  // namespace

SyntacticClass classify_arith(const ArithPtr& f) {
    if (is_delta0(f)) return SyntacticClass::Delta0;
    if (f->kind == ArithFormula::Kind::Pr) return SyntacticClass::Sigma1;  // by fiat
    if (f->kind == ArithFormula::Kind::Exists) {
        bool any = false;
        const ArithFormula* matrix = strip_block(f, ArithFormula::Kind::Exists, any);
        if (is_delta0_raw(matrix)) return SyntacticClass::Sigma1;
        bool anyU = false;
        const ArithFormula* inner = matrix;
        while (inner->kind == ArithFormula::Kind::Forall) {
            anyU = true;
            inner = inner->f1.get();
        }
        if (anyU && is_delta0_raw(inner)) return SyntacticClass::Sigma2;
        return SyntacticClass::Other;
    }
    if (f->kind == ArithFormula::Kind::Forall) {
        bool any = false;
        const ArithFormula* matrix = strip_block(f, ArithFormula::Kind::Forall, any);
        if (is_delta0_raw(matrix)) return SyntacticClass::Pi1;
        bool anyE = false;
        const ArithFormula* inner = matrix;
        while (inner->kind == ArithFormula::Kind::Exists) {
            anyE = true;
            inner = inner->f1.get();
        }
        if (anyE && is_delta0_raw(inner)) return SyntacticClass::Pi2;
        return SyntacticClass::Other;
    }
    if (f->kind == ArithFormula::Kind::Not) return dual_class(classify_arith(f->f1));
    return SyntacticClass::Other;
}

// ---------- Modal formulas ----------

namespace {

ModalPtr make_modal(ModalFormula::Kind k, std::string letter, ModalPtr a, ModalPtr b) {
    auto f = std::make_shared<ModalFormula>();
    auto* m = const_cast<ModalFormula*>(f.get());
    m->kind = k;
    m->letter = std::move(letter);
    m->a = std::move(a);
    m->b = std::move(b);
    return f;
}

}  // namespace

ModalPtr mf_bottom() {
    static const ModalPtr v = make_modal(ModalFormula::Kind::Bottom, "", nullptr, nullptr);
    return v;
}
ModalPtr mf_top() {
    static const ModalPtr v = make_modal(ModalFormula::Kind::Top, "", nullptr, nullptr);
    return v;
}
ModalPtr mf_letter(std::string name) {
    return make_modal(ModalFormula::Kind::Letter, std::move(name), nullptr, nullptr);
}
ModalPtr mf_not(ModalPtr f) { return make_modal(ModalFormula::Kind::Not, "", std::move(f), nullptr); }
ModalPtr mf_and(ModalPtr a, ModalPtr b) {
    return make_modal(ModalFormula::Kind::And, "", std::move(a), std::move(b));
}
ModalPtr mf_or(ModalPtr a, ModalPtr b) {
    return make_modal(ModalFormula::Kind::Or, "", std::move(a), std::move(b));
}
ModalPtr mf_implies(ModalPtr a, ModalPtr b) {
    return make_modal(ModalFormula::Kind::Implies, "", std::move(a), std::move(b));
}
ModalPtr mf_iff(ModalPtr a, ModalPtr b) {
    return make_modal(ModalFormula::Kind::Iff, "", std::move(a), std::move(b));
}
ModalPtr mf_box(ModalPtr f) { return make_modal(ModalFormula::Kind::Box, "", std::move(f), nullptr); }
ModalPtr mf_diamond(ModalPtr f) { return mf_not(mf_box(mf_not(std::move(f)))); }

bool equal(const ModalPtr& f, const ModalPtr& g) {
    if (f.get() == g.get()) return true;
    if (!f || !g) return false;
    if (f->kind != g->kind || f->letter != g->letter) return false;
    if ((f->a != nullptr) != (g->a != nullptr)) return false;
    if (f->a && !equal(f->a, g->a)) return false;
    if ((f->b != nullptr) != (g->b != nullptr)) return false;
    if (f->b && !equal(f->b, g->b)) return false;
    return true;
}

bool letterless(const ModalPtr& f) {
    if (f->kind == ModalFormula::Kind::Letter) return false;
    if (f->a && !letterless(f->a)) return false;
    if (f->b && !letterless(f->b)) return false;
    return true;
}

std::set<std::string> letters_of(const ModalPtr& f) {
    std::set<std::string> out;
    std::function<void(const ModalPtr&)> go = [&](const ModalPtr& g) {
        if (g->kind == ModalFormula::Kind::Letter) out.insert(g->letter);
        if (g->a) go(g->a);
        if (g->b) go(g->b);
    };
    go(f);
    return out;
}

ModalPtr subst_letter(const ModalPtr& f, const std::string& letter, const ModalPtr& repl) {
    if (f->kind == ModalFormula::Kind::Letter)
        return f->letter == letter ? repl : f;
    if (!f->a) return f;
    ModalPtr a = subst_letter(f->a, letter, repl);
    ModalPtr b = f->b ? subst_letter(f->b, letter, repl) : nullptr;
    if (a.get() == f->a.get() && b.get() == f->b.get()) return f;
    return make_modal(f->kind, f->letter, std::move(a), std::move(b));
}

std::vector<ModalPtr> subformulas_modal(const ModalPtr& f) {
    std::vector<ModalPtr> out;
    auto seen = [&](const ModalPtr& g) {
        return std::any_of(out.begin(), out.end(), [&](const ModalPtr& h) { return equal(g, h); });
    };
    std::function<void(const ModalPtr&)> go = [&](const ModalPtr& g) {
        if (!seen(g)) out.push_back(g);
        if (g->a) go(g->a);
        if (g->b) go(g->b);
    };
    go(f);
    return out;
}

// ---------- Free-variable naming ----------

namespace {

const char* kFreeBases[6] = {"x", "y", "z", "u", "v", "w"};

std::string free_name(std::size_t slot) {
    std::string base = kFreeBases[slot % 6];
    std::size_t round = slot / 6;
    return round == 0 ? base : base + std::to_string(round);
}

// Inverse of free_name; false if the identifier is not a reserved free name.
bool free_slot(const std::string& name, std::size_t& slot) {
    std::size_t base = 6;
    std::size_t len = 0;
    for (std::size_t i = 0; i < 6; i++) {
        const std::string b = kFreeBases[i];
        if (name.rfind(b, 0) == 0 && b.size() > len) {
            base = i;
            len = b.size();
        }
    }
    if (base == 6) return false;
    std::string suffix = name.substr(len);
    if (suffix.empty()) {
        slot = base;
        return true;
    }
    if (!std::all_of(suffix.begin(), suffix.end(), [](char c) { return std::isdigit(c); }))
        return false;
    if (suffix[0] == '0') return false;
    slot = base + 6 * std::stoul(suffix);
    return true;
}

// ---------- Tokenizer (shared by both surface grammars) ----------

struct Token {
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(const std::string& text, bool modal) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto peek2 = [&](const char* s) { return text.compare(i, 2, s) == 0; };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            i++;
            continue;
        }
        std::size_t start = i;
        if (text.compare(i, 3, "<->") == 0) {
            out.push_back({"<->", start});
            i += 3;
        } else if (peek2("->")) {
            out.push_back({"->", start});
            i += 2;
        } else if (peek2("<=")) {
            out.push_back({"<=", start});
            i += 2;
        } else if (modal && peek2("[]")) {
            out.push_back({"[]", start});
            i += 2;
        } else if (modal && peek2("<>")) {
            out.push_back({"<>", start});
            i += 2;
        } else if (modal && (peek2("#F") || peek2("#T"))) {
            out.push_back({text.substr(i, 2), start});
            i += 2;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
                    text[j] == '\''))
                j++;
            out.push_back({text.substr(i, j - i), start});
            i = j;
        } else if (std::string("()[]+*=~&|.<0").find(c) != std::string::npos) {
            out.push_back({std::string(1, c), start});
            i++;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
    }
    return out;
}

// ---------- Arithmetic parser ----------

struct ArithParser {
    std::vector<Token> toks;
    std::size_t pos = 0;
    bool allow_free;
    std::vector<std::string> binders;  // innermost last

    explicit ArithParser(const std::string& text, bool allow)
        : toks(tokenize(text, false)), allow_free(allow) {}

    bool at_end() const { return pos >= toks.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return at_end() ? empty : toks[pos].text;
    }
    std::size_t here() const { return at_end() ? (toks.empty() ? 0 : toks.back().pos + 1) : toks[pos].pos; }
    bool accept(const std::string& s) {
        if (!at_end() && toks[pos].text == s) {
            pos++;
            return true;
        }
        return false;
    }
    void expect(const std::string& s) {
        if (!accept(s)) throw ParseError("expected '" + s + "'", here());
    }

    static bool is_ident(const std::string& s) {
        if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
            return false;
        return s != "A" && s != "E" && s != "S" && s != "Pr" && s != "diag";
    }

    TermPtr var_ref(const std::string& name, std::size_t position) {
        for (std::size_t k = 0; k < binders.size(); k++) {
            if (binders[binders.size() - 1 - k] == name) return term_var(k);
        }
        std::size_t slot = 0;
        if (!allow_free || !free_slot(name, slot))
            throw ParseError("unbound variable name '" + name + "'", position);
        return term_var(binders.size() + slot);
    }

    TermPtr parse_term() {
        TermPtr t = parse_mul();
        while (accept("+")) t = term_add(t, parse_mul());
        return t;
    }
    TermPtr parse_mul() {
        TermPtr t = parse_prim();
        while (accept("*")) t = term_mul(t, parse_prim());
        return t;
    }
    TermPtr parse_prim() {
        std::size_t position = here();
        if (accept("0")) return term_zero();
        if (accept("S")) {
            expect("(");
            TermPtr t = parse_term();
            expect(")");
            return term_succ(t);
        }
        if (accept("diag")) {
            expect("(");
            TermPtr t = parse_term();
            expect(")");
            return term_diag(t);
        }
        if (accept("(")) {
            TermPtr t = parse_term();
            expect(")");
            return t;
        }
        if (!at_end() && is_ident(peek())) {
            std::string name = peek();
            pos++;
            return var_ref(name, position);
        }
        throw ParseError("expected a term", position);
    }

    ArithPtr parse_formula() { return parse_iff(); }
    ArithPtr parse_iff() {
        ArithPtr f = parse_imp();
        if (accept("<->")) return fa_iff(f, parse_iff());
        return f;
    }
    ArithPtr parse_imp() {
        ArithPtr f = parse_or();
        if (accept("->")) return fa_implies(f, parse_imp());
        return f;
    }
    ArithPtr parse_or() {
        ArithPtr f = parse_and();
        while (accept("|")) f = fa_or(f, parse_and());
        return f;
    }
    ArithPtr parse_and() {
        ArithPtr f = parse_unary();
        while (accept("&")) f = fa_and(f, parse_unary());
        return f;
    }
    ArithPtr parse_unary() {
        if (accept("~")) return fa_not(parse_unary());
        if (peek() == "A" || peek() == "E") return parse_quantifier();
        return parse_primary();
    }
    ArithPtr parse_quantifier() {
        bool universal = peek() == "A";
        pos++;
        if (at_end() || !is_ident(peek()))
            throw ParseError("expected a bound variable name", here());
        std::string name = peek();
        pos++;
        TermPtr bound;
        if (accept("<")) bound = parse_term();  // parsed outside the binder scope
        expect(".");
        binders.push_back(name);
        ArithPtr body = parse_formula();
        binders.pop_back();
        if (bound) {
            return universal ? fa_bounded_forall(bound, body) : fa_bounded_exists(bound, body);
        }
        return universal ? fa_forall(body) : fa_exists(body);
    }
    ArithPtr parse_primary() {
        std::size_t save = pos;
        // An atom can itself start with '(' (parenthesized left term), so try
        // the atom reading first and fall back to a parenthesized formula.
        try {
            return parse_atom();
        } catch (const ParseError&) {
            pos = save;
        }
        expect("(");
        ArithPtr f = parse_formula();
        expect(")");
        return f;
    }
    ArithPtr parse_atom() {
        if (accept("Pr")) {
            expect("[");
            if (at_end()) throw ParseError("expected a theory tag", here());
            std::string tag = peek();
            pos++;
            expect("]");
            expect("(");
            TermPtr t = parse_term();
            expect(")");
            return fa_pr(tag, t);
        }
        TermPtr lhs = parse_term();
        if (accept("=")) return fa_eq(lhs, parse_term());
        if (accept("<=")) {
            // t <= u  ~>  E z. z + t = u
            TermPtr t = shift_term(lhs, 1);
            TermPtr u = shift_term(parse_term(), 1);
            return fa_exists(fa_eq(term_add(term_var(0), t), u));
        }
        throw ParseError("expected '=' or '<=' after a term", here());
    }
};

// ---------- Modal parser ----------

struct ModalParser {
    std::vector<Token> toks;
    std::size_t pos = 0;

    explicit ModalParser(const std::string& text) : toks(tokenize(text, true)) {}

    bool at_end() const { return pos >= toks.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return at_end() ? empty : toks[pos].text;
    }
    std::size_t here() const { return at_end() ? (toks.empty() ? 0 : toks.back().pos + 1) : toks[pos].pos; }
    bool accept(const std::string& s) {
        if (!at_end() && toks[pos].text == s) {
            pos++;
            return true;
        }
        return false;
    }
    void expect(const std::string& s) {
        if (!accept(s)) throw ParseError("expected '" + s + "'", here());
    }

    ModalPtr parse_formula() { return parse_iff(); }
    ModalPtr parse_iff() {
        ModalPtr f = parse_imp();
        if (accept("<->")) return mf_iff(f, parse_iff());
        return f;
    }
    ModalPtr parse_imp() {
        ModalPtr f = parse_or();
        if (accept("->")) return mf_implies(f, parse_imp());
        return f;
    }
    ModalPtr parse_or() {
        ModalPtr f = parse_and();
        while (accept("|")) f = mf_or(f, parse_and());
        return f;
    }
    ModalPtr parse_and() {
        ModalPtr f = parse_unary();
        while (accept("&")) f = mf_and(f, parse_unary());
        return f;
    }
    ModalPtr parse_unary() {
        if (accept("~")) return mf_not(parse_unary());
        if (accept("[]")) return mf_box(parse_unary());
        if (accept("<>")) return mf_diamond(parse_unary());
        return parse_primary();
    }
    ModalPtr parse_primary() {
        std::size_t position = here();
        if (accept("#F")) return mf_bottom();
        if (accept("#T")) return mf_top();
        if (accept("(")) {
            ModalPtr f = parse_formula();
            expect(")");
            return f;
        }
        if (!at_end() && (std::isalpha(static_cast<unsigned char>(peek()[0])) || peek()[0] == '_')) {
            std::string name = peek();
            pos++;
            return mf_letter(name);
        }
        throw ParseError("expected a modal formula", position);
    }
};

}  // namespace

ArithPtr parse_arith(const std::string& text, const ParseOptions& opts) {
    ArithParser p(text, opts.allow_free);
    ArithPtr f = p.parse_formula();
    if (!p.at_end()) throw ParseError("trailing input after formula", p.here());
    return f;
}

ModalPtr parse_modal(const std::string& text) {
    ModalParser p(text);
    ModalPtr f = p.parse_formula();
    if (!p.at_end()) throw ParseError("trailing input after formula", p.here());
    return f;
}

// ---------- Surface rendering ----------

namespace {

// precedence levels: 0 iff, 1 imp, 2 or, 3 and, 4 unary/atom
int arith_level(const ArithFormula& f) {
    switch (f.kind) {
        case ArithFormula::Kind::Iff: return 0;
        case ArithFormula::Kind::Implies: return 1;
        case ArithFormula::Kind::Or: return 2;
        case ArithFormula::Kind::And: return 3;
        default: return 4;
    }
}

bool is_quantifier_like(const ArithFormula& f) {
    const ArithFormula* g = &f;
    while (g->kind == ArithFormula::Kind::Not) g = g->f1.get();
    return is_binder(g->kind);
}

struct ArithRenderer {
    std::set<std::string> reserved;          // names of free slots in use
    std::vector<std::string> binders;        // innermost last

    std::string fresh_binder_name() {
        for (std::size_t k = 0;; k++) {
            std::string cand = free_name(k);
            if (reserved.count(cand)) continue;
            if (std::find(binders.begin(), binders.end(), cand) != binders.end()) continue;
            return cand;
        }
    }

    std::string term(const TermPtr& t, int parent) {
        // parent: 0 add-context, 1 mul-context, 2 prim-context
        switch (t->kind) {
            case Term::Kind::Zero: return "0";
            case Term::Kind::Succ: return "S(" + term(t->a, 0) + ")";
            case Term::Kind::Diag: return "diag(" + term(t->a, 0) + ")";
            case Term::Kind::Var: {
                std::size_t i = t->index;
                if (i < binders.size()) return binders[binders.size() - 1 - i];
                return free_name(i - binders.size());
            }
            case Term::Kind::Add: {
                std::string s = term(t->a, 0) + " + " + term(t->b, 1);
                return parent >= 1 ? "(" + s + ")" : s;
            }
            case Term::Kind::Mul: {
                std::string s = term(t->a, 1) + " * " + term(t->b, 2);
                return parent >= 2 ? "(" + s + ")" : s;
            }
        }
        return "?";
    }

    std::string formula(const ArithPtr& f, int parent, bool binary_operand) {
        std::string s;
        int lvl = arith_level(*f);
        switch (f->kind) {
            case ArithFormula::Kind::Eq:
                s = term(f->t1, 0) + " = " + term(f->t2, 0);
                break;
            case ArithFormula::Kind::Pr:
                s = "Pr[" + f->tag + "](" + term(f->t1, 0) + ")";
                break;
            case ArithFormula::Kind::Not:
                s = "~" + formula(f->f1, 4, false);
                break;
            case ArithFormula::Kind::And:
                s = formula(f->f1, 3, true) + " & " + formula(f->f2, 4, true);
                break;
            case ArithFormula::Kind::Or:
                s = formula(f->f1, 2, true) + " | " + formula(f->f2, 3, true);
                break;
            case ArithFormula::Kind::Implies:
                s = formula(f->f1, 2, true) + " -> " + formula(f->f2, 1, true);
                break;
            case ArithFormula::Kind::Iff:
                s = formula(f->f1, 1, true) + " <-> " + formula(f->f2, 0, true);
                break;
            case ArithFormula::Kind::Forall:
            case ArithFormula::Kind::Exists:
            case ArithFormula::Kind::BoundedForall:
            case ArithFormula::Kind::BoundedExists: {
                bool universal = f->kind == ArithFormula::Kind::Forall ||
                                 f->kind == ArithFormula::Kind::BoundedForall;
                std::string bound;
                if (f->t1) bound = " < " + term(f->t1, 0);
                std::string name = fresh_binder_name();
                binders.push_back(name);
                std::string body = formula(f->f1, 0, false);
                binders.pop_back();
                s = std::string(universal ? "A " : "E ") + name + bound + ". " + body;
                break;
            }
        }
        // A quantifier body extends maximally right, so a quantified (or
        // negated-quantified) formula standing as a binary operand always
        // gets parentheses; otherwise plain precedence rules apply.
        bool parens = lvl < parent || (binary_operand && is_quantifier_like(*f));
        if (f->kind == ArithFormula::Kind::Not && lvl < parent) parens = true;
        return parens ? "(" + s + ")" : s;
    }
};

int modal_level(const ModalFormula& f) {
    switch (f.kind) {
        case ModalFormula::Kind::Iff: return 0;
        case ModalFormula::Kind::Implies: return 1;
        case ModalFormula::Kind::Or: return 2;
        case ModalFormula::Kind::And: return 3;
        default: return 4;
    }
}

std::string modal_render(const ModalPtr& f, int parent) {
    std::string s;
    int lvl = modal_level(*f);
    switch (f->kind) {
        case ModalFormula::Kind::Bottom: s = "#F"; break;
        case ModalFormula::Kind::Top: s = "#T"; break;
        case ModalFormula::Kind::Letter: s = f->letter; break;
        case ModalFormula::Kind::Not:
            // ~[]~ prints as the diamond
            if (f->a->kind == ModalFormula::Kind::Box &&
                f->a->a->kind == ModalFormula::Kind::Not)
                s = "<>" + modal_render(f->a->a->a, 4);
            else
                s = "~" + modal_render(f->a, 4);
            break;
        case ModalFormula::Kind::Box: s = "[]" + modal_render(f->a, 4); break;
        case ModalFormula::Kind::And:
            s = modal_render(f->a, 3) + " & " + modal_render(f->b, 4);
            break;
        case ModalFormula::Kind::Or:
            s = modal_render(f->a, 2) + " | " + modal_render(f->b, 3);
            break;
        case ModalFormula::Kind::Implies:
            s = modal_render(f->a, 2) + " -> " + modal_render(f->b, 1);
            break;
        case ModalFormula::Kind::Iff:
            s = modal_render(f->a, 1) + " <-> " + modal_render(f->b, 0);
            break;
    }
    return lvl < parent ? "(" + s + ")" : s;
}

}  // namespace

std::string render(const TermPtr& t) {
    ArithRenderer r;
    return r.term(t, 0);
}

std::string render(const ArithPtr& f) {
    ArithRenderer r;
    for (std::size_t slot : free_vars(f)) r.reserved.insert(free_name(slot));
    return r.formula(f, 0, false);
}

std::string render(const ModalPtr& f) { return modal_render(f, 0); }

// ---------- Canonical token stream ----------

namespace {

void term_tokens(const TermPtr& t, std::vector<std::string>& out) {
    switch (t->kind) {
        case Term::Kind::Zero: out.push_back("0"); return;
        case Term::Kind::Var: out.push_back("v" + std::to_string(t->index)); return;
        case Term::Kind::Succ:
            out.push_back("S");
            out.push_back("(");
            term_tokens(t->a, out);
            out.push_back(")");
            return;
        case Term::Kind::Diag:
            out.push_back("diag");
            out.push_back("(");
            term_tokens(t->a, out);
            out.push_back(")");
            return;
        case Term::Kind::Add:
        case Term::Kind::Mul:
            out.push_back("(");
            term_tokens(t->a, out);
            out.push_back(t->kind == Term::Kind::Add ? "+" : "*");
            term_tokens(t->b, out);
            out.push_back(")");
            return;
    }
}

void formula_tokens(const ArithPtr& f, std::vector<std::string>& out) {
    using K = ArithFormula::Kind;
    switch (f->kind) {
        case K::Eq:
            term_tokens(f->t1, out);
            out.push_back("=");
            term_tokens(f->t2, out);
            return;
        case K::Pr:
            out.push_back("Pr");
            out.push_back("(");
            term_tokens(f->t1, out);
            out.push_back(")");
            return;
        case K::Not:
            out.push_back("~");
            formula_tokens(f->f1, out);
            return;
        case K::And:
        case K::Or:
        case K::Implies:
        case K::Iff: {
            const char* op = f->kind == K::And ? "&"
                           : f->kind == K::Or  ? "|"
                           : f->kind == K::Implies ? "->"
                                                   : "<->";
            out.push_back("(");
            formula_tokens(f->f1, out);
            out.push_back(op);
            formula_tokens(f->f2, out);
            out.push_back(")");
            return;
        }
        case K::Forall:
        case K::Exists:
        case K::BoundedForall:
        case K::BoundedExists: {
            bool universal = f->kind == K::Forall || f->kind == K::BoundedForall;
            out.push_back(universal ? "A" : "E");
            if (f->t1) {
                out.push_back("(");
                term_tokens(f->t1, out);
                out.push_back(")");
            }
            out.push_back("(");
            formula_tokens(f->f1, out);
            out.push_back(")");
            return;
        }
    }
}

struct TokenStreamParser {
    const std::vector<std::string>& toks;
    const std::string& tag;
    std::size_t pos = 0;

    bool at_end() const { return pos >= toks.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return at_end() ? empty : toks[pos];
    }
    bool accept(const std::string& s) {
        if (!at_end() && toks[pos] == s) {
            pos++;
            return true;
        }
        return false;
    }
    void expect(const std::string& s) {
        if (!accept(s)) throw ParseError("token stream: expected '" + s + "'", pos);
    }

    // position just past the ')' matching the '(' at `open`
    std::size_t match_paren(std::size_t open) const {
        int depth = 0;
        for (std::size_t i = open; i < toks.size(); i++) {
            if (toks[i] == "(") depth++;
            if (toks[i] == ")") {
                depth--;
                if (depth == 0) return i + 1;
            }
        }
        throw ParseError("token stream: unbalanced parentheses", open);
    }

    TermPtr term() {
        if (accept("0")) return term_zero();
        if (accept("S")) {
            expect("(");
            TermPtr t = term();
            expect(")");
            return term_succ(t);
        }
        if (accept("diag")) {
            expect("(");
            TermPtr t = term();
            expect(")");
            return term_diag(t);
        }
        if (accept("(")) {
            TermPtr a = term();
            bool add = accept("+");
            if (!add) expect("*");
            TermPtr b = term();
            expect(")");
            return add ? term_add(a, b) : term_mul(a, b);
        }
        if (!at_end() && peek().size() > 1 && peek()[0] == 'v') {
            std::string digits = peek().substr(1);
            if (std::all_of(digits.begin(), digits.end(),
                            [](char c) { return std::isdigit(c); })) {
                pos++;
                return term_var(std::stoul(digits));
            }
        }
        throw ParseError("token stream: expected a term", pos);
    }

    ArithPtr formula() {
        if (accept("~")) return fa_not(formula());
        if (peek() == "A" || peek() == "E") {
            bool universal = peek() == "A";
            pos++;
            if (peek() != "(") throw ParseError("token stream: expected '('", pos);
            std::size_t after = match_paren(pos);
            bool bounded = after < toks.size() && toks[after] == "(";
            if (bounded) {
                expect("(");
                TermPtr bound = term();
                expect(")");
                expect("(");
                ArithPtr body = formula();
                expect(")");
                return universal ? fa_bounded_forall(bound, body)
                                 : fa_bounded_exists(bound, body);
            }
            expect("(");
            ArithPtr body = formula();
            expect(")");
            return universal ? fa_forall(body) : fa_exists(body);
        }
        if (accept("Pr")) {
            expect("(");
            TermPtr t = term();
            expect(")");
            return fa_pr(tag, t);
        }
        if (accept("(")) {
            ArithPtr a = formula();
            std::string op = peek();
            if (op != "&" && op != "|" && op != "->" && op != "<->")
                throw ParseError("token stream: expected a connective", pos);
            pos++;
            ArithPtr b = formula();
            expect(")");
            if (op == "&") return fa_and(a, b);
            if (op == "|") return fa_or(a, b);
            if (op == "->") return fa_implies(a, b);
            return fa_iff(a, b);
        }
        TermPtr lhs = term();
        expect("=");
        TermPtr rhs = term();
        return fa_eq(lhs, rhs);
    }
};

}  // namespace

std::vector<std::string> canonical_tokens(const ArithPtr& f) {
    std::vector<std::string> out;
    formula_tokens(f, out);
    return out;
}

ArithPtr parse_canonical_tokens(const std::vector<std::string>& tokens, const std::string& pr_tag) {
    TokenStreamParser p{tokens, pr_tag};
    ArithPtr f = p.formula();
    if (!p.at_end()) throw ParseError("token stream: trailing tokens", p.pos);
    return f;
}

}  // namespace selfref
