// Copyright 2026 The rcnmp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include "doctest.h"
#include "rcnmp/config.hpp"

namespace rcnmp {
namespace {

TEST_CASE("key value parsing") {
  std::istringstream in(
      "# comment\n"
      "seed = 7\n"
      "\n"
      "  beta=0.25   # trailing\n"
      "flag = yes\n"
      "list = 1, -2.5,3e-1\n"
      "seed = 9\n");
  const KeyValues kv = KeyValues::parse(in);
  CHECK(kv.get_int("seed", 0) == 9);
  CHECK(kv.get_double("beta", 0.0) == 0.25);
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_doubles("list") == std::vector<double>{1.0, -2.5, 0.3});
  CHECK(kv.get_string("missing", "x") == "x");
  CHECK(kv.get_int("missing", 4) == 4);
  CHECK_THROWS_AS(kv.at("missing"), std::invalid_argument);
  CHECK(kv.items().size() == 4);
}

TEST_CASE("key value errors") {
  std::istringstream no_eq("seed 7\n");
  CHECK_THROWS_AS(KeyValues::parse(no_eq), std::invalid_argument);
  std::istringstream no_key(" = 7\n");
  CHECK_THROWS_AS(KeyValues::parse(no_key), std::invalid_argument);

  KeyValues kv;
  kv.set("n", "1.5");
  kv.set("b", "maybe");
  CHECK_THROWS_AS(kv.get_int("n", 0), std::invalid_argument);
  CHECK_THROWS_AS(kv.get_bool("b", false), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("1.0x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
  CHECK(parse_number(" 2.5 ") == 2.5);
  CHECK(parse_number("4.9406564584124654e-324") > 0.0);
  CHECK(parse_number_list("0.1;0.2", ';') == std::vector<double>{0.1, 0.2});
}

}  // namespace
}  // namespace rcnmp
