#include "selfref/coding.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace selfref {

namespace {

// first-n-primes cache, grown on demand
std::vector<unsigned long>& prime_cache() {
    static std::vector<unsigned long> primes{2, 3};
    return primes;
}

void ensure_primes(std::size_t count) {
    auto& primes = prime_cache();
    unsigned long candidate = primes.back();
    while (primes.size() < count) {
        candidate += 2;
        bool composite = false;
        for (unsigned long p : primes) {
            if (p * p > candidate) break;
            if (candidate % p == 0) {
                composite = true;
                break;
            }
        }
        if (!composite) primes.push_back(candidate);
    }
}

}  // namespace

unsigned long token_code(const std::string& token) {
    if (token == "0") return 1;
    if (token == "S") return 2;
    if (token == "+") return 3;
    if (token == "*") return 4;
    if (token == "=") return 5;
    if (token == "~") return 6;
    if (token == "&") return 7;
    if (token == "|") return 8;
    if (token == "->") return 9;
    if (token == "<->") return 10;
    if (token == "A") return 11;
    if (token == "E") return 12;
    if (token == "(") return 13;
    if (token == ")") return 14;
    if (token == "diag") return 15;
    if (token == "Pr") return 16;
    if (token.size() > 1 && token[0] == 'v' &&
        std::all_of(token.begin() + 1, token.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return 17 + std::stoul(token.substr(1));
    throw std::invalid_argument("token_code: unknown token '" + token + "'");
}

std::string code_token(unsigned long code) {
    static const char* fixed[] = {"0", "S", "+", "*", "=", "~", "&", "|",
                                  "->", "<->", "A", "E", "(", ")", "diag", "Pr"};
    if (code == 0) throw std::invalid_argument("code_token: 0 is not a token code");
    if (code <= 16) return fixed[code - 1];
    return "v" + std::to_string(code - 17);
}

GodelNumber encode_formula(const ArithPtr& f) {
    std::vector<std::string> tokens = canonical_tokens(f);
    ensure_primes(tokens.size());
    const auto& primes = prime_cache();
    GodelNumber result = 1;
    GodelNumber power;
    for (std::size_t i = 0; i < tokens.size(); i++) {
        mpz_ui_pow_ui(power.get_mpz_t(), primes[i], token_code(tokens[i]));
        result *= power;
    }
    return result;
}

ArithPtr decode_formula(const GodelNumber& n, const std::string& ambient_tag) {
    if (n < 2) throw NotACode("decode: " + n.get_str() + " is below any formula code");
    GodelNumber rest = n;
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (rest != 1) {
        ensure_primes(i + 1);
        unsigned long p = prime_cache()[i];
        GodelNumber reduced;
        mp_bitcnt_t exponent =
            mpz_remove(reduced.get_mpz_t(), rest.get_mpz_t(), GodelNumber(p).get_mpz_t());
        if (exponent == 0)
            throw NotACode("decode: exponent gap at prime " + std::to_string(p));
        tokens.push_back(code_token(exponent));
        rest = reduced;
        i++;
    }
    try {
        return parse_canonical_tokens(tokens, ambient_tag);
    } catch (const ParseError& e) {
        throw NotACode(std::string("decode: token stream does not parse (") + e.what() + ")");
    }
}

TermPtr numeral(const GodelNumber& n, NumeralStyle style) {
    if (style == NumeralStyle::Unary) {
        if (!n.fits_ulong_p())
            throw std::invalid_argument("numeral: unary style is only for small numbers");
        TermPtr t = term_zero();
        for (unsigned long i = 0, m = n.get_ui(); i < m; i++) t = term_succ(t);
        return t;
    }
    if (n == 0) return term_zero();
    const TermPtr two = term_succ(term_succ(term_zero()));
    const TermPtr one = term_succ(term_zero());
    // bits MSB -> LSB reproduce num(2k) = two*num(k), num(2k+1) = two*num(k)+one
    std::size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
    // leading bit: num(1) per the recurrence is two*num(0) + S(0)
    TermPtr acc = term_add(term_mul(two, term_zero()), one);
    for (std::size_t i = bits - 1; i-- > 0;) {
        TermPtr doubled = term_mul(two, acc);
        if (mpz_tstbit(n.get_mpz_t(), i))
            acc = term_add(doubled, one);
        else
            acc = doubled;
    }
    return acc;
}

TermPtr numeral(unsigned long n, NumeralStyle style) { return numeral(GodelNumber(n), style); }

TermPtr godel_term(const ArithPtr& f) {
    return numeral(encode_formula(f), NumeralStyle::Efficient);
}

namespace {

GodelNumber diag_value(const GodelNumber& n, const std::string& ambient_tag) {
    ArithPtr coded;
    try {
        coded = decode_formula(n, ambient_tag);
    } catch (const NotACode& e) {
        throw EvalError(std::string("diag: argument is not a formula code (") + e.what() + ")");
    }
    auto fv = free_vars(coded);
    if (fv.size() != 1 || *fv.begin() != 0)
        throw EvalError("diag: coded formula must have exactly one free variable (slot 0)");
    ArithPtr diagonalized = substitute(coded, numeral(n, NumeralStyle::Efficient));
    return encode_formula(diagonalized);
}

}  // namespace

GodelNumber eval_term(const TermPtr& t, const std::string& ambient_tag) {
    // Explicit stack: numeral terms nest far deeper than the call stack.
    struct Frame {
        const Term* node;
        int state = 0;
        GodelNumber left;
    };
    std::vector<Frame> frames;
    GodelNumber value = 0;
    frames.push_back({t.get()});
    while (!frames.empty()) {
        Frame& f = frames.back();
        switch (f.node->kind) {
            case Term::Kind::Zero:
                value = 0;
                frames.pop_back();
                break;
            case Term::Kind::Var:
                throw EvalError("eval_term: term is not closed");
            case Term::Kind::Succ:
                if (f.state == 0) {
                    f.state = 1;
                    frames.push_back({f.node->a.get()});
                } else {
                    value += 1;
                    frames.pop_back();
                }
                break;
            case Term::Kind::Diag:
                if (f.state == 0) {
                    f.state = 1;
                    frames.push_back({f.node->a.get()});
                } else {
                    value = diag_value(value, ambient_tag);
                    frames.pop_back();
                }
                break;
            case Term::Kind::Add:
            case Term::Kind::Mul:
                if (f.state == 0) {
                    f.state = 1;
                    frames.push_back({f.node->a.get()});
                } else if (f.state == 1) {
                    f.state = 2;
                    f.left = std::move(value);
                    value = 0;
                    frames.push_back({f.node->b.get()});
                } else {
                    if (f.node->kind == Term::Kind::Add)
                        value += f.left;
                    else
                        value *= f.left;
                    frames.pop_back();
                }
                break;
        }
    }
    return value;
}

std::size_t term_token_count(const TermPtr& t) {
    std::size_t count = 0;
    std::vector<const Term*> work{t.get()};
    while (!work.empty()) {
        const Term* x = work.back();
        work.pop_back();
        switch (x->kind) {
            case Term::Kind::Zero:
            case Term::Kind::Var: count += 1; break;
            case Term::Kind::Succ:
            case Term::Kind::Diag:
                count += 3;
                work.push_back(x->a.get());
                break;
            case Term::Kind::Add:
            case Term::Kind::Mul:
                count += 3;
                work.push_back(x->a.get());
                work.push_back(x->b.get());
                break;
        }
    }
    return count;
}

std::size_t formula_token_count(const ArithPtr& f) {
    using K = ArithFormula::Kind;
    switch (f->kind) {
        case K::Eq: return term_token_count(f->t1) + 1 + term_token_count(f->t2);
        case K::Pr: return 3 + term_token_count(f->t1);
        case K::Not: return 1 + formula_token_count(f->f1);
        case K::And:
        case K::Or:
        case K::Implies:
        case K::Iff:
            return 3 + formula_token_count(f->f1) + formula_token_count(f->f2);
        case K::Forall:
        case K::Exists: return 3 + formula_token_count(f->f1);
        case K::BoundedForall:
        case K::BoundedExists:
            return 5 + term_token_count(f->t1) + formula_token_count(f->f1);
    }
    return 0;
}

}  // namespace selfref
