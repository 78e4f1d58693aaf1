#include <random>
#include <vector>

#include "doctest.h"
#include "selfref/coding.hpp"
#include "selfref/syntax.hpp"

using namespace selfref;

namespace {

ArithPtr random_codable(std::mt19937& rng, int depth, std::size_t scope) {
    // full arithmetic AST with ambient tag "T" on Pr atoms (the pinned token
    // table erases tags, so the roundtrip corpus keeps them uniform)
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 10);
    auto term = [&](auto self, int d, std::size_t sc) -> TermPtr {
        std::uniform_int_distribution<int> t(0, d <= 0 ? 1 : 5);
        switch (t(rng)) {
            case 0: return term_zero();
            case 1: {
                if (sc == 0) return term_zero();
                std::uniform_int_distribution<std::size_t> v(0, sc - 1);
                return term_var(v(rng));
            }
            case 2: return term_succ(self(self, d - 1, sc));
            case 3: return term_add(self(self, d - 1, sc), self(self, d - 1, sc));
            case 4: return term_mul(self(self, d - 1, sc), self(self, d - 1, sc));
            default: return term_diag(self(self, d - 1, sc));
        }
    };
    auto tm = [&](int d, std::size_t sc) { return term(term, d, sc); };
    switch (pick(rng)) {
        case 0: return fa_eq(tm(depth - 1, scope), tm(depth - 1, scope));
        case 1: return fa_pr("T", tm(depth - 1, scope));
        case 2: return fa_not(random_codable(rng, depth - 1, scope));
        case 3: return fa_and(random_codable(rng, depth - 1, scope), random_codable(rng, depth - 1, scope));
        case 4: return fa_or(random_codable(rng, depth - 1, scope), random_codable(rng, depth - 1, scope));
        case 5: return fa_implies(random_codable(rng, depth - 1, scope), random_codable(rng, depth - 1, scope));
        case 6: return fa_iff(random_codable(rng, depth - 1, scope), random_codable(rng, depth - 1, scope));
        case 7: return fa_forall(random_codable(rng, depth - 1, scope + 1));
        case 8: return fa_exists(random_codable(rng, depth - 1, scope + 1));
        case 9: return fa_bounded_forall(tm(depth - 1, scope), random_codable(rng, depth - 1, scope + 1));
        default: return fa_bounded_exists(tm(depth - 1, scope), random_codable(rng, depth - 1, scope + 1));
    }
}

}  // namespace

TEST_SUITE("coding") {

TEST_CASE("encode: pinned value for the smallest sentence") {
    // tokens [0,=,0] -> codes [1,5,1] -> 2^1 * 3^5 * 5^1 = 2430
    CHECK(encode_formula(parse_arith("0=0")) == 2430);
}

TEST_CASE("decode: pinned inverse") {
    CHECK(equal(decode_formula(GodelNumber(2430)), parse_arith("0=0")));
}

TEST_CASE("decode: NotACode diagnostics") {
    CHECK_THROWS_AS(decode_formula(GodelNumber(7)), NotACode);    // gap at 2, 3, 5
    CHECK_THROWS_AS(decode_formula(GodelNumber(1)), NotACode);
    CHECK_THROWS_AS(decode_formula(GodelNumber(0)), NotACode);
    CHECK_THROWS_AS(decode_formula(GodelNumber(2)), NotACode);    // "0" alone is no formula
    CHECK_THROWS_AS(decode_formula(GodelNumber(6)), NotACode);    // tokens [0,0]
}

TEST_CASE("roundtrip on S(0)=S(0)") {
    ArithPtr f = parse_arith("S(0)=S(0)");
    CHECK(equal(decode_formula(encode_formula(f)), f));
}

TEST_CASE("property: decode after encode is the identity (1000 formulas)") {
    std::mt19937 rng(2430);
    for (int i = 0; i < 1000; i++) {
        ArithPtr f = random_codable(rng, 8, 0);
        CHECK(equal(decode_formula(encode_formula(f), "T"), f));
    }
}

TEST_CASE("injectivity: all formulas with short token streams get distinct codes") {
    // brute force over every AST whose canonical stream has <= 4 tokens:
    // t=u (3 tokens), ~t=u (4), Pr(t) (4) for atomic terms t, u
    std::vector<TermPtr> atoms{term_zero(), term_var(0), term_var(1), term_var(2)};
    std::vector<ArithPtr> formulas;
    for (const auto& a : atoms)
        for (const auto& b : atoms) {
            formulas.push_back(fa_eq(a, b));
            formulas.push_back(fa_not(fa_eq(a, b)));
        }
    for (const auto& a : atoms) formulas.push_back(fa_pr("T", a));
    std::vector<GodelNumber> codes;
    for (const auto& f : formulas) codes.push_back(encode_formula(f));
    for (std::size_t i = 0; i < codes.size(); i++)
        for (std::size_t j = i + 1; j < codes.size(); j++) CHECK(codes[i] != codes[j]);
}

TEST_CASE("numeral: unary") {
    CHECK(equal(numeral(3ul, NumeralStyle::Unary),
                term_succ(term_succ(term_succ(term_zero())))));
    CHECK(equal(numeral(0ul, NumeralStyle::Unary), term_zero()));
}

TEST_CASE("numeral: efficient base case and worked example") {
    CHECK(equal(numeral(0ul, NumeralStyle::Efficient), term_zero()));
    // num(6) = two * num(3) = two * (two * num(1) + one), num(1) = two*0 + one
    TermPtr two = term_succ(term_succ(term_zero()));
    TermPtr one = term_succ(term_zero());
    TermPtr num1 = term_add(term_mul(two, term_zero()), one);
    TermPtr num3 = term_add(term_mul(two, num1), one);
    TermPtr num6 = term_mul(two, num3);
    CHECK(equal(numeral(6ul, NumeralStyle::Efficient), num6));
    CHECK(eval_term(numeral(6ul, NumeralStyle::Efficient)) == 6);
}

TEST_CASE("property: both numeral styles evaluate to n for n <= 1000") {
    for (unsigned long n = 0; n <= 1000; n++) {
        CHECK(eval_term(numeral(n, NumeralStyle::Unary)) == n);
        CHECK(eval_term(numeral(n, NumeralStyle::Efficient)) == n);
    }
}

TEST_CASE("godel_term evaluates to the encoding") {
    ArithPtr f = parse_arith("0=0");
    CHECK(eval_term(godel_term(f)) == 2430);
    std::mt19937 rng(99);
    for (int i = 0; i < 50; i++) {
        ArithPtr g = random_codable(rng, 5, 0);
        CHECK(eval_term(godel_term(g)) == encode_formula(g));
    }
}

TEST_CASE("godel_term: distinct formulas, distinct terms") {
    std::vector<ArithPtr> formulas{
        parse_arith("0=0"), parse_arith("S(0)=0"), parse_arith("0=S(0)"),
        parse_arith("~0=0"), parse_arith("Pr[T](0)")};
    for (std::size_t i = 0; i < formulas.size(); i++)
        for (std::size_t j = i + 1; j < formulas.size(); j++)
            CHECK(!equal(godel_term(formulas[i]), godel_term(formulas[j])));
}

TEST_CASE("efficient numeral size grows subquadratically") {
    // doubling family: conjunction towers over 0=0
    ArithPtr f = parse_arith("0=0");
    std::vector<double> ratios;
    for (int k = 0; k < 5; k++) {
        double n = static_cast<double>(formula_token_count(f));
        double m = static_cast<double>(term_token_count(godel_term(f)));
        double lg = std::log2(n) + 1;
        ratios.push_back(m / (n * lg * lg));
        f = fa_and(f, f);
    }
    // m = O(n log^2 n): the normalized ratio must not blow up across doublings
    for (std::size_t i = 1; i < ratios.size(); i++) CHECK(ratios[i] <= ratios[0] * 4.0);
}

TEST_CASE("eval_term: errors") {
    CHECK_THROWS_AS(eval_term(term_var(0)), EvalError);
    // diag of a non-code
    CHECK_THROWS_AS(eval_term(term_diag(term_succ(term_zero()))), EvalError);
    // diag of the code of a sentence (no free variable)
    GodelNumber sentence_code = encode_formula(parse_arith("0=0"));
    CHECK_THROWS_AS(eval_term(term_diag(numeral(sentence_code, NumeralStyle::Efficient))),
                    EvalError);
}

TEST_CASE("eval_term: diag evaluates the diagonalization") {
    // diag(#psi) = #(psi[x := numeral(#psi)])
    ArithPtr psi = parse_arith("x = 0");
    GodelNumber code = encode_formula(psi);
    ArithPtr diagonalized = substitute(psi, numeral(code, NumeralStyle::Efficient));
    GodelNumber expected = encode_formula(diagonalized);
    CHECK(eval_term(term_diag(numeral(code, NumeralStyle::Efficient))) == expected);
}

}  // TEST_SUITE
