#include <doctest.h>

#include <capstan/filter.hpp>
#include <capstan/properties.hpp>

#include "support/generators.hpp"

#include <string>
#include <vector>

using capstan::filter;
using capstan::filter_error;
using capstan::property_map;
using capstan::property_value;
using capstan::version;

namespace {

// The reference map for the coercion table: one attribute per kind.
property_map table_map() {
    property_map m;
    m.set("s", property_value(std::string("05")));
    m.set("l", property_value(std::int64_t(5)));
    m.set("d", property_value(2.5));
    m.set("v", property_value(version{1, 2, 0}));
    m.set("sv", property_value(std::string("1.2.0")));
    m.set("list", property_value::string_list({"alpha", "beta"}));
    m.set("lnum", property_value::make_list(
                      capstan::value_kind::int64,
                      {std::int64_t(1), std::int64_t(2), std::int64_t(3)}));
    return m;
}

bool eval(const std::string& text, const property_map& m) {
    return filter::parse(text).evaluate(m);
}

} // namespace

TEST_CASE("coercion at evaluation follows the stored kind") {
    property_map m = table_map();

    // String compares bytes: no numeric normalization.
    CHECK(!eval("(s=5)", m));
    CHECK(eval("(s=05)", m));
    CHECK(eval("(s>=0)", m));
    CHECK(eval("(s<=1)", m));

    // Long coerces the literal to an integer.
    CHECK(eval("(l=5)", m));
    CHECK(eval("(l=05)", m));
    CHECK(eval("(l>=4)", m));
    CHECK(!eval("(l>=6)", m));
    CHECK(eval("(l<=5)", m));
    CHECK(!eval("(l<=4)", m));
    // Failed coercion is false, not an error.
    CHECK(!eval("(l=x)", m));
    CHECK(!eval("(l>=x)", m));
    CHECK(!eval("(l=5.0)", m));

    // Double.
    CHECK(eval("(d=2.5)", m));
    CHECK(eval("(d>=2.4)", m));
    CHECK(!eval("(d<=2.4)", m));
    CHECK(!eval("(d=x)", m));

    // Version compares numerically per component.
    CHECK(eval("(v=1.2.0)", m));
    CHECK(!eval("(v>=1.10.0)", m));
    CHECK(eval("(v<=1.10.0)", m));
    CHECK(!eval("(v=1.2)", m));

    // The same version rendered as a String compares as bytes: "1.2.0" is
    // lexicographically greater than "1.10.0".
    CHECK(eval("(sv>=1.10.0)", m));

    // Lists match when any element matches.
    CHECK(eval("(list=alpha)", m));
    CHECK(eval("(list=beta)", m));
    CHECK(!eval("(list=gamma)", m));
    CHECK(eval("(lnum>=3)", m));
    CHECK(!eval("(lnum>=4)", m));
    CHECK(eval("(lnum=2)", m));
}

TEST_CASE("presence and absence") {
    property_map m = table_map();
    CHECK(eval("(s=*)", m));
    CHECK(eval("(lnum=*)", m));
    CHECK(!eval("(missing=*)", m));
    CHECK(!eval("(missing=5)", m));
    CHECK(!eval("(missing>=5)", m));
    // Closed world: negation over an absent attribute is true.
    CHECK(eval("(!(missing=5))", m));
    CHECK(eval("(!(missing=*))", m));
    CHECK(!eval("(!(s=05))", m));
}

TEST_CASE("substring matching applies to string values only") {
    property_map m = table_map();
    CHECK(eval("(s=0*)", m));
    CHECK(eval("(s=*5)", m));
    CHECK(eval("(s=*0*)", m));
    CHECK(eval("(s=**)", m));
    CHECK(!eval("(s=0*9)", m));
    CHECK(!eval("(s=5*)", m));
    // Stored kind is Long: wildcards never match non-strings.
    CHECK(!eval("(l=5*)", m));
    CHECK(!eval("(l=**)", m));
    // Over a string list: any element.
    CHECK(eval("(list=al*)", m));
    CHECK(eval("(list=*eta)", m));
    CHECK(!eval("(list=*x*)", m));

    property_map chunks;
    chunks.set("t", property_value(std::string("abcbc")));
    CHECK(eval("(t=a*b*c)", chunks));
    CHECK(eval("(t=a*bc*c)", chunks)); // greedy-free: chunks found in order
    CHECK(!eval("(t=a*d*c)", chunks));
    CHECK(eval("(t=abcbc)", chunks));
    CHECK(!eval("(t=c*)", chunks));
}

TEST_CASE("boolean connectives") {
    property_map m = table_map();
    CHECK(eval("(&(s=05)(l=5))", m));
    CHECK(!eval("(&(s=05)(l=6))", m));
    CHECK(eval("(|(s=xx)(l=5))", m));
    CHECK(!eval("(|(s=xx)(l=6))", m));
    CHECK(eval("(&(s=05))", m));
    CHECK(eval("(|(!(s=05))(v>=1.0.0))", m));
}

TEST_CASE("escapes in values") {
    property_map m;
    m.set("a", property_value(std::string("*")));
    m.set("b", property_value(std::string("back\\slash")));
    m.set("c", property_value(std::string("left(right)")));

    // Escaped star is a literal compare, not presence.
    CHECK(eval("(a=\\*)", m));
    CHECK(!eval("(s=\\*)", table_map()));
    CHECK(eval("(b=back\\\\slash)", m));
    CHECK(eval("(c=left\\(right\\))", m));
    CHECK(eval("(b=back*)", m));

    filter f = filter::parse("(a=\\*)");
    CHECK(f.root().kind == filter::node_kind::compare);
    CHECK(f.root().literal == "*");
    CHECK(f.to_string() == "(a=\\*)");
}

TEST_CASE("whitespace outside values is ignored and the text canonicalizes") {
    filter spaced = filter::parse(" ( & (s=05)\t( | (l=5) (l=6) ) ) ");
    filter tight = filter::parse("(&(s=05)(|(l=5)(l=6)))");
    CHECK(spaced == tight);
    CHECK(spaced.to_string() == "(&(s=05)(|(l=5)(l=6)))");
}

TEST_CASE("parse builds the same tree as the factories") {
    filter parsed = filter::parse("(&(a=1)(!(b>=2)))");
    std::vector<filter> children;
    children.push_back(filter::compare("a", filter::compare_op::eq, "1"));
    children.push_back(filter::negation(
        filter::compare("b", filter::compare_op::ge, "2")));
    filter built = filter::conjunction(std::move(children));
    CHECK(parsed == built);
    CHECK(parsed.to_string() == built.to_string());
}

TEST_CASE("syntax errors carry byte offsets") {
    auto offset_of = [](const std::string& text) -> std::size_t {
        try {
            filter::parse(text);
        } catch (const filter_error& e) {
            CHECK(e.error_code() == filter_error::code::syntax);
            return e.offset();
        }
        FAIL("expected filter_error for '" << text << "'");
        return std::size_t(-1);
    };

    CHECK(offset_of("") == 0);
    CHECK(offset_of("a=1") == 0);
    CHECK(offset_of("(a=1)x") == 5);

    for (const char* bad :
         {"(a=1", "()", "(&)", "(|)", "(!)", "(a)", "(a>1)", "(a<1)", "(=1)",
          "(a=1))", "((a=1)", "(a=x(y)", "(a=1\\)", "(a=\\n)", "(a>=x*y)",
          "(a<=*)", "(!(a=1)(b=2))", "(a me=1)"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(filter::parse(bad), filter_error);
        std::size_t off = offset_of(bad);
        CHECK(off <= std::string(bad).size());
    }
}

TEST_CASE("depth limit") {
    std::string nested = "(a=1)";
    for (int i = 0; i < 63; ++i)
        nested = "(!" + nested + ")";
    CHECK_NOTHROW(filter::parse(nested)); // depth 64

    std::string too_deep = "(!" + nested + ")"; // depth 65
    CHECK_THROWS_AS(filter::parse(too_deep), filter_error);
    try {
        filter::parse(too_deep);
    } catch (const filter_error& e) {
        CHECK(e.error_code() == filter_error::code::depth_limit);
    }
    // The limit is configurable.
    CHECK_NOTHROW(filter::parse(too_deep, 128));
    CHECK_THROWS_AS(filter::parse("(!(!(a=1)))", 1), filter_error);
}

TEST_CASE("factory preconditions") {
    CHECK_THROWS_AS(filter::conjunction({}), capstan::error);
    CHECK_THROWS_AS(filter::disjunction({}), capstan::error);
    CHECK_THROWS_AS(filter::substring("a", {"", ""}), capstan::error);
    CHECK_THROWS_AS(filter::substring("a", {"x"}), capstan::error);
    CHECK_THROWS_AS(
        filter::compare("bad name!", filter::compare_op::eq, "1"),
        capstan::error);
}

TEST_CASE("round trip parse(to_string(f)) == f (property)") {
    gen::rng g(4001);
    for (int i = 0; i < 1000; ++i) {
        capstan::filter f = gen::random_filter(g, 5);
        std::string text = f.to_string();
        CAPTURE(text);
        capstan::filter back = filter::parse(text);
        CHECK(back == f);
        CHECK(back.to_string() == text);
    }
}

TEST_CASE("evaluation is total (property)") {
    gen::rng g(4002);
    for (int i = 0; i < 1000; ++i) {
        capstan::filter f = gen::random_filter(g, 5);
        capstan::property_map m = gen::random_property_map(g);
        bool value = false;
        CHECK_NOTHROW(value = f.evaluate(m));
        (void)value;
    }
}

TEST_CASE("connective laws hold pointwise (property)") {
    gen::rng g(4003);
    for (int i = 0; i < 500; ++i) {
        capstan::filter f = gen::random_filter(g, 3);
        capstan::filter h = gen::random_filter(g, 3);
        capstan::property_map m = gen::random_property_map(g);

        bool fv = f.evaluate(m);
        bool hv = h.evaluate(m);
        CHECK(filter::conjunction({f, h}).evaluate(m) == (fv && hv));
        CHECK(filter::disjunction({f, h}).evaluate(m) == (fv || hv));
        CHECK(filter::negation(f).evaluate(m) == !fv);
        CHECK(filter::negation(filter::negation(f)).evaluate(m) == fv);

        // De Morgan at evaluation level.
        bool lhs = filter::negation(filter::conjunction({f, h})).evaluate(m);
        bool rhs = filter::disjunction({filter::negation(f), filter::negation(h)})
                       .evaluate(m);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("filters over absent attributes are false (property)") {
    gen::rng g(4004);
    property_map empty;
    for (int i = 0; i < 300; ++i) {
        capstan::filter leaf = gen::random_leaf(g);
        CHECK(!leaf.evaluate(empty));
        CHECK(filter::negation(leaf).evaluate(empty));
    }
}
