#include "catch2/catch_amalgamated.hpp"
#include "epifilter/date.hpp"
#include "epifilter/errors.hpp"

using namespace epifilter;

TEST_CASE("civil day number round trip", "[date]") {
  // Known anchor: 1970-01-01 is day 0 of the epoch.
  CHECK(Date{1970, 1, 1}.to_days() == 0);
  CHECK(Date{1970, 1, 2}.to_days() == 1);
  CHECK(Date{1969, 12, 31}.to_days() == -1);

  for (int days : {-700000, -1, 0, 1, 18283, 18444, 20000, 700000}) {
    Date d = Date::from_days(days);
    CHECK(d.valid());
    CHECK(d.to_days() == days);
  }
}

TEST_CASE("validity and leap years", "[date]") {
  CHECK(Date{2020, 2, 29}.valid());
  CHECK_FALSE(Date{2021, 2, 29}.valid());
  CHECK(Date{2000, 2, 29}.valid());
  CHECK_FALSE(Date{1900, 2, 29}.valid());
  CHECK_FALSE(Date{2020, 4, 31}.valid());
  CHECK_FALSE(Date{2020, 13, 1}.valid());
  CHECK_FALSE(Date{2020, 0, 10}.valid());
}

TEST_CASE("arithmetic and ordering", "[date]") {
  Date a{2020, 2, 21};
  Date b{2020, 3, 1};
  CHECK(b - a == 9);
  CHECK(a + 9 == b);
  CHECK(a < b);
  CHECK(a + 0 == a);
  CHECK((Date{2020, 12, 31} + 1) == (Date{2021, 1, 1}));
}

TEST_CASE("iso parsing and formatting", "[date]") {
  Date d = parse_iso_date("2020-03-09");
  CHECK(d == (Date{2020, 3, 9}));
  CHECK(d.iso() == "2020-03-09");
  CHECK(parse_iso_date("1999-12-31").iso() == "1999-12-31");

  CHECK_THROWS_AS(parse_iso_date("2020/03/09"), FormatError);
  CHECK_THROWS_AS(parse_iso_date("2020-3-9"), FormatError);
  CHECK_THROWS_AS(parse_iso_date("2021-02-29"), FormatError);
  CHECK_THROWS_AS(parse_iso_date(""), FormatError);
  CHECK_THROWS_AS(parse_iso_date("2020-03-09x"), FormatError);
}

TEST_CASE("month/day/two-digit-year parsing", "[date]") {
  CHECK(parse_mdy_date("3/9/20") == (Date{2020, 3, 9}));
  CHECK(parse_mdy_date("1/22/20") == (Date{2020, 1, 22}));
  CHECK(parse_mdy_date("12/31/21") == (Date{2021, 12, 31}));
  CHECK(parse_mdy_date("02/29/20") == (Date{2020, 2, 29}));

  CHECK_THROWS_AS(parse_mdy_date("2/30/20"), FormatError);
  CHECK_THROWS_AS(parse_mdy_date("3-9-20"), FormatError);
  CHECK_THROWS_AS(parse_mdy_date("3/9/2020x"), FormatError);
  CHECK_THROWS_AS(parse_mdy_date(""), FormatError);
}
