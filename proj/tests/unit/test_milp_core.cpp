#include <doctest.h>

#include <cmath>
#include <limits>

#include "mgrestore/milp_core.hpp"

using namespace mgrestore;
using E = LinExpr;

TEST_CASE("rows merge terms and move constants") {
  MilpModel m;
  VarId x = m.add_continuous("x", 0, 10), y = m.add_binary("y");
  E e = E::var(x, 2) + E::var(y, 1) + E::var(x, -0.5) + 3.0;
  int r = m.add_constraint("c1", e, Sense::LessEqual, 7.0, "fam");
  REQUIRE(r == 0);
  const Constraint& c = m.constraints()[0];
  CHECK(c.rhs == 4.0);
  REQUIRE(c.terms.size() == 2);
  CHECK(c.terms[0] == std::pair<VarId, double>{x, 1.5});
  CHECK(c.tag == "fam");
  CHECK(m.add_constraint("c2", E::var(x) - E::var(x), Sense::LessEqual, 1.0, "fam") == -1);
  CHECK_THROWS_AS(m.add_constraint("c3", E(2.0), Sense::LessEqual, 1.0, "fam"), MilpError);
  CHECK_THROWS_AS(m.add_constraint("c1", E::var(x), Sense::LessEqual, 1.0, "fam"), MilpError);
}

TEST_CASE("names and bounds are validated") {
  MilpModel m;
  m.add_continuous("ok_1.a", 0, 1);
  CHECK_THROWS_AS(m.add_continuous("ok_1.a", 0, 1), MilpError);
  CHECK_THROWS_AS(m.add_continuous("1bad", 0, 1), MilpError);
  CHECK_THROWS_AS(m.add_continuous("e12", 0, 1), MilpError);
  CHECK_THROWS_AS(m.add_continuous("has space", 0, 1), MilpError);
  CHECK_THROWS_AS(m.add_continuous("lo_gt_hi", 2, 1), MilpError);
  CHECK(valid_lp_name("xN_12_3"));
  CHECK_FALSE(valid_lp_name("free"));
  CHECK_FALSE(valid_lp_name(""));
}

TEST_CASE("expression bounds over the box") {
  MilpModel m;
  VarId a = m.add_continuous("a", -1, 2), b = m.add_continuous("b", 0, 3);
  auto [lo, hi] = m.bounds_of(E::var(a, 2) - E::var(b) + 1.0);
  CHECK(lo == -4.0);
  CHECK(hi == 5.0);
}

TEST_CASE("product gadget pins w to x times v at integer x") {
  const double bounds[][2] = {{-2, 3}, {0.5, 4}, {-5, -1}, {0, 0}, {-1e-3, 1e-3}};
  for (const auto& bd : bounds) {
    MilpModel m;
    VarId x = m.add_binary("x");
    VarId v = m.add_continuous("v", bd[0], bd[1]);
    VarId w = link_binary_product(m, x, v, "w", "product");
    for (int xi = 0; xi <= 1; ++xi)
      for (int k = 0; k <= 8; ++k) {
        const double vv = bd[0] + (bd[1] - bd[0]) * k / 8.0;
        // the feasible interval of w given (x, v)
        double wlo = -INFINITY, whi = INFINITY;
        for (const auto& row : m.constraints()) {
          double rest = 0.0, cw = 0.0;
          for (auto [id, c] : row.terms) {
            if (id == w)
              cw = c;
            else
              rest += c * (id == x ? xi : vv);
          }
          const double bound = (row.rhs - rest) / cw;
          const bool upper = (row.sense == Sense::LessEqual) == (cw > 0);
          if (upper)
            whi = std::min(whi, bound);
          else
            wlo = std::max(wlo, bound);
        }
        CHECK(whi - wlo <= 1e-12);
        CHECK(wlo <= xi * vv + 1e-12);
        CHECK(whi >= xi * vv - 1e-12);
      }
  }
  MilpModel m;
  VarId y = m.add_continuous("y", 0, 1);
  VarId z = m.add_continuous("z", 0, INFINITY);
  CHECK_THROWS_AS(link_binary_product(m, y, y, "w", "t"), MilpError);
  VarId b = m.add_binary("b");
  CHECK_THROWS_AS(link_binary_product(m, b, z, "w", "t"), MilpError);
}

TEST_CASE("freeze rows record their big-M") {
  MilpModel m;
  VarId s = m.add_binary("s");
  VarId a = m.add_continuous("a", 0, 4), b = m.add_continuous("b", -1, 2);
  freeze_if(m, E::var(s), E::var(a), E::var(b), 5.0, "fz", "freeze");
  CHECK(m.num_constraints() == 2);
  REQUIRE(m.big_m_records().size() == 2);
  CHECK(m.big_m_records()[0].required == 5.0);
  CHECK(audit_big_m(m).empty());
  freeze_if(m, E::var(s), E::var(a), E::var(b), 3.0, "fz2", "freeze");
  CHECK(audit_big_m(m).size() == 2);
  CHECK_THROWS_AS(freeze_if(m, E::var(s), E::var(a), E::var(b), 0.0, "fz3", "freeze"), MilpError);
}

TEST_CASE("LP text is deterministic and parses back") {
  MilpModel m;
  VarId x = m.add_continuous("x", -INFINITY, INFINITY);
  VarId y = m.add_binary("y");
  VarId z = m.add_continuous("z", 1.5, 1.5);
  VarId u = m.add_continuous("u", -2, 0.1);
  m.add_constraint("r1", E::var(x) + E::var(y, 3) - E::var(z, 0.1), Sense::LessEqual, 7.25, "a");
  m.add_constraint("r2", E::var(x, -1) + E::var(u), Sense::GreaterEqual, -1e-12, "a");
  m.add_constraint("r3", E::var(y) + E::var(u, 1.0 / 3.0), Sense::Equal, 0.5, "b");
  m.set_objective(E::var(x, 2) - E::var(y));
  const std::string lp = export_lp(m);
  CHECK(export_lp(m) == lp);
  CHECK(lp.find("Binary") != std::string::npos);
  MilpModel back = parse_lp(lp);
  REQUIRE(back.num_variables() == 4);
  REQUIRE(back.num_constraints() == 3);
  CHECK(export_lp(back) == lp);
  CHECK(back.variable(back.find("u")).upper == 0.1);
  CHECK(std::isinf(back.variable(back.find("x")).lower));
  CHECK(back.constraints()[2].terms[1].second == 1.0 / 3.0);
}

TEST_CASE("LP parser handles hand-written input") {
  const char* text = R"(\ a comment
Maximize
 obj: 3 x + 2 y
Subject To
 c1: x + y
   <= 4
 c2: x - y >= -2
Bounds
 0 <= x <= 3
 y <= 10
 -5 <= z
General
)";
  CHECK_THROWS_AS(parse_lp(text), MilpError);
  std::string ok = text;
  ok.replace(ok.find("General"), 7, "Binaries\n b\nEnd");
  MilpModel m = parse_lp(ok);
  CHECK(m.num_constraints() == 2);
  // maximize is stored as minimizing the negation
  CHECK(m.objective()[0].second == -3.0);
  CHECK(m.variable(m.find("x")).upper == 3.0);
  CHECK(m.variable(m.find("z")).lower == -5.0);
  CHECK(m.variable(m.find("b")).type == VarType::Binary);
  CHECK_THROWS_AS(parse_lp("Minimize\n obj: x\nSubject To\n c1: x <=\nEnd\n"), MilpError);
}

TEST_CASE("solutions are checked against rows, bounds and integrality") {
  MilpModel m;
  VarId x = m.add_continuous("x", 0, 5), y = m.add_binary("y");
  m.add_constraint("r", E::var(x) + E::var(y, 2), Sense::LessEqual, 4, "a");
  m.set_objective(E::var(x, -1) + 2.0);
  SolvedModel ok = apply_solution(m, std::vector<double>{2.0, 1.0});
  CHECK(ok.max_violation == 0.0);
  CHECK(ok.objective == 0.0);
  SolvedModel bad = apply_solution(m, std::vector<double>{3.0, 1.0});
  CHECK(bad.max_violation == doctest::Approx(1.0));
  CHECK(m.constraints()[bad.worst_row].name == "r");
  SolvedModel frac = apply_solution(m, std::vector<double>{0.0, 0.4});
  CHECK(frac.integrality_violations.size() == 1);
  CHECK_THROWS_AS(apply_solution(m, std::vector<double>{6.0, 0.0}), MilpError);
  CHECK_THROWS_AS(apply_solution(m, std::unordered_map<std::string, double>{{"x", 1.0}}), MilpError);
  CHECK(apply_solution(m, std::unordered_map<std::string, double>{{"x", 1.0}, {"y", 0.0}}).objective == 1.0);
  CHECK(format_assignment(m, {1.0, 0.0}) == "x 1\ny 0\n");
}
