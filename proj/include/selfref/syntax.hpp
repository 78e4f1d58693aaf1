#ifndef SELFREF_SYNTAX_HPP
#define SELFREF_SYNTAX_HPP

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Abstract syntax, parsing, printing, substitution and syntactic
// classification for the two object languages: first-order arithmetic
// over {0, S, +, *, =} (plus the designated symbols diag and Pr) and
// propositional modal logic.
//
// Variables are de Bruijn indices internally. In the surface syntax,
// bound variables carry arbitrary names while *free* variables use the
// reserved positional names x, y, z, u, v, w, x1, y1, ... which map to
// slots 0, 1, 2, ... of the enclosing context.

namespace selfref {

struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg), position(pos) {}
};

// ---------- Terms ----------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    enum class Kind { Zero, Succ, Add, Mul, Var, Diag };

    Kind kind;
    std::size_t index = 0;  // Var only
    TermPtr a, b;
    // 0 for closed subtrees, else 1 + max de Bruijn index occurring free.
    // Lets substitution and shifting skip closed subterms in O(1), which
    // matters for the multi-megabyte numeral terms the coding layer builds.
    std::size_t fv_bound = 0;

    ~Term();  // iterative: numeral chains are too deep for recursive teardown
};

TermPtr term_zero();
TermPtr term_succ(TermPtr t);
TermPtr term_add(TermPtr a, TermPtr b);
TermPtr term_mul(TermPtr a, TermPtr b);
TermPtr term_var(std::size_t index);
TermPtr term_diag(TermPtr t);

bool equal(const TermPtr& s, const TermPtr& t);
bool term_closed(const TermPtr& t);
// Shift free variable indices >= cutoff up by delta.
TermPtr shift_term(const TermPtr& t, std::size_t delta, std::size_t cutoff = 0);
// Replace free occurrences of de Bruijn index `target` by closed `repl`.
TermPtr subst_term(const TermPtr& t, std::size_t target, const TermPtr& repl);
bool contains_diag(const TermPtr& t);

// ---------- Arithmetic formulas ----------

struct ArithFormula;
using ArithPtr = std::shared_ptr<const ArithFormula>;

struct ArithFormula {
    enum class Kind {
        Eq, Pr, Not, And, Or, Implies, Iff,
        Forall, Exists, BoundedForall, BoundedExists
    };

    Kind kind;
    TermPtr t1, t2;      // Eq: both; Pr: t1; Bounded*: t1 = bound
    std::string tag;     // Pr: context tag
    ArithPtr f1, f2;     // connectives; quantifiers: f1 = body
    std::size_t fv_bound = 0;
};

ArithPtr fa_eq(TermPtr a, TermPtr b);
ArithPtr fa_pr(std::string tag, TermPtr t);
ArithPtr fa_not(ArithPtr f);
ArithPtr fa_and(ArithPtr a, ArithPtr b);
ArithPtr fa_or(ArithPtr a, ArithPtr b);
ArithPtr fa_implies(ArithPtr a, ArithPtr b);
ArithPtr fa_iff(ArithPtr a, ArithPtr b);
ArithPtr fa_forall(ArithPtr body);
ArithPtr fa_exists(ArithPtr body);
ArithPtr fa_bounded_forall(TermPtr bound, ArithPtr body);
ArithPtr fa_bounded_exists(TermPtr bound, ArithPtr body);

bool equal(const ArithPtr& f, const ArithPtr& g);
bool is_sentence(const ArithPtr& f);

// Exact set of free de Bruijn slots (relative to the top level).
std::set<std::size_t> free_vars(const ArithPtr& f);

// Replace the unique free variable (slot 0) of `f` by the closed term `t`.
// Throws std::invalid_argument if f is closed, has more than one free
// variable, its free variable is not slot 0, or t is not closed.
ArithPtr substitute(const ArithPtr& f, const TermPtr& t);

// Shift free variable indices of a formula (used by parser sugar).
ArithPtr shift_formula(const ArithPtr& f, std::size_t delta, std::size_t cutoff = 0);

bool contains_pr(const ArithPtr& f);
bool contains_diag(const ArithPtr& f);

// ---------- Syntactic classification ----------

enum class SyntacticClass { Delta0, Sigma1, Pi1, Sigma2, Pi2, Other };

std::string to_string(SyntacticClass c);

// Strict surface classification, no prenexing:
//   Delta0  — every quantifier bounded, no Pr;
//   Sigma1  — nonempty existential block over a Delta0 matrix, or a bare
//             Pr atom (Sigma1 by fiat);
//   Pi1     — nonempty universal block over a Delta0 matrix;
//   Sigma2  — existential block over a Pi1 formula; Pi2 dually;
//   a top-level negation classifies as the dual of its operand.
SyntacticClass classify_arith(const ArithPtr& f);

// ---------- Modal formulas ----------

struct ModalFormula;
using ModalPtr = std::shared_ptr<const ModalFormula>;

struct ModalFormula {
    enum class Kind { Bottom, Top, Letter, Not, And, Or, Implies, Iff, Box };

    Kind kind;
    std::string letter;
    ModalPtr a, b;
};

ModalPtr mf_bottom();
ModalPtr mf_top();
ModalPtr mf_letter(std::string name);
ModalPtr mf_not(ModalPtr f);
ModalPtr mf_and(ModalPtr a, ModalPtr b);
ModalPtr mf_or(ModalPtr a, ModalPtr b);
ModalPtr mf_implies(ModalPtr a, ModalPtr b);
ModalPtr mf_iff(ModalPtr a, ModalPtr b);
ModalPtr mf_box(ModalPtr f);
// Diamond is printing sugar for ~[]~.
ModalPtr mf_diamond(ModalPtr f);

bool equal(const ModalPtr& f, const ModalPtr& g);
bool letterless(const ModalPtr& f);
std::set<std::string> letters_of(const ModalPtr& f);

// Replace every occurrence of `letter` by `repl`.
ModalPtr subst_letter(const ModalPtr& f, const std::string& letter, const ModalPtr& repl);

// All subformulas, each once, outside-in (preorder, first occurrence).
std::vector<ModalPtr> subformulas_modal(const ModalPtr& f);

// ---------- Parsing ----------

struct ParseOptions {
    // Accept free variables (reserved positional names)? When false an
    // unbound identifier is an error, so the result is a sentence.
    bool allow_free = true;
};

ArithPtr parse_arith(const std::string& text, const ParseOptions& opts = {});
ModalPtr parse_modal(const std::string& text);

// ---------- Printing ----------

// Minimal-parenthesis surface form; parse(render(f)) == f.
std::string render(const ArithPtr& f);
std::string render(const TermPtr& t);
std::string render(const ModalPtr& f);

// Canonical fully parenthesized token stream of a formula, as the token
// names of the coding layer's pinned table. Bounded quantifiers spell
// `A ( bound ) ( body )`, unbounded `A ( body )`; Pr erases its tag.
std::vector<std::string> canonical_tokens(const ArithPtr& f);

// Inverse of canonical_tokens; `pr_tag` is restored on decoded Pr atoms.
// Throws ParseError on malformed streams.
ArithPtr parse_canonical_tokens(const std::vector<std::string>& tokens,
                                const std::string& pr_tag);

}  // namespace selfref

#endif  // SELFREF_SYNTAX_HPP
