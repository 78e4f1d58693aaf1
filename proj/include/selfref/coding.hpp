#ifndef SELFREF_CODING_HPP
#define SELFREF_CODING_HPP

#include <gmpxx.h>

#include <stdexcept>
#include <string>

#include "selfref/syntax.hpp"

// Gödel numbering of arithmetic formulas: the canonical token stream
// t1..tn of a formula maps to  prod_i p_i^{code(t_i)}  over the first n
// primes. Token codes are pinned:
//
//   0:1  S:2  +:3  *:4  =:5  ~:6  &:7  |:8  ->:9  <->:10
//   A:11  E:12  (:13  ):14  diag:15  Pr:16  v_i:17+i
//
// The table has a single code for Pr, so encoding erases the context tag;
// decode_formula restores a caller-supplied ambient tag instead.

namespace selfref {

using GodelNumber = mpz_class;

struct NotACode : std::runtime_error {
    explicit NotACode(const std::string& msg) : std::runtime_error(msg) {}
};

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Pinned token table. Throws std::invalid_argument on unknown tokens.
unsigned long token_code(const std::string& token);
std::string code_token(unsigned long code);

GodelNumber encode_formula(const ArithPtr& f);

// Inverse: factor, recover the token stream, parse. Pr atoms get
// `ambient_tag`. Throws NotACode on exponent gaps or malformed streams.
ArithPtr decode_formula(const GodelNumber& n, const std::string& ambient_tag = "T");

enum class NumeralStyle { Unary, Efficient };

// Unary: S^n(0). Efficient: num(0) = 0, num(2k) = (S(S(0))) * num(k),
// num(2k+1) = (S(S(0))) * num(k) + S(0). Both evaluate to n.
TermPtr numeral(const GodelNumber& n, NumeralStyle style);
TermPtr numeral(unsigned long n, NumeralStyle style);

// The standard term #f: the efficient numeral of encode_formula(f).
TermPtr godel_term(const ArithPtr& f);

// Value of a closed term. diag(t) evaluates to the code of the formula
// coded by value(t) with its unique free variable replaced by the
// efficient numeral of value(t). Throws EvalError on free variables or
// when a diag argument is not the code of a one-free-variable formula.
GodelNumber eval_term(const TermPtr& t, const std::string& ambient_tag = "T");

// Canonical token counts without materializing the streams (numeral terms
// run to tens of millions of tokens).
std::size_t term_token_count(const TermPtr& t);
std::size_t formula_token_count(const ArithPtr& f);

}  // namespace selfref

#endif  // SELFREF_CODING_HPP
