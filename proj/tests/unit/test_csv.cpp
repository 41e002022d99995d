#include "we/csv.hpp"

#include <doctest.h>

#include <sstream>
#include <stdexcept>

using namespace we;

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.103011022e-05, -7.5e-300, 0.0}) {
        CHECK(std::stod(csv::format_double(v)) == v);
    }
}

TEST_CASE("matrix round trip with comments") {
    const TransitionMatrix K{{0.9, 0.1}, {0.2, 0.8}};
    std::ostringstream os;
    csv::write_matrix(os, K, "config_hash=0123");
    const auto text = os.str();
    CHECK(text.rfind("# config_hash=0123\ni,j,value\n1,1,", 0) == 0);
    std::istringstream is(text);
    CHECK(csv::read_matrix(is) == K);
}

TEST_CASE("vector round trip") {
    const std::vector<double> v{0.25, 0.5, 0.25};
    std::ostringstream os;
    csv::write_vector(os, v);
    CHECK(os.str().rfind("i,value\n1,0.25\n", 0) == 0);
    std::istringstream is(os.str());
    CHECK(csv::read_vector(is) == v);
}

TEST_CASE("malformed input is rejected") {
    {
        std::istringstream is("i,j,value\n1,1,1\n1,1,0\n");
        CHECK_THROWS_AS(csv::read_matrix(is), std::invalid_argument);
    }
    {
        std::istringstream is("a,b\n1,2\n");
        CHECK_THROWS_AS(csv::read_vector(is), std::invalid_argument);
    }
    {
        std::istringstream is("i,value\n0,1\n");
        CHECK_THROWS_AS(csv::read_vector(is), std::invalid_argument);
    }
    {
        std::istringstream is("i,value\n1,abc\n");
        CHECK_THROWS_AS(csv::read_vector(is), std::invalid_argument);
    }
    {
        std::istringstream is("i,j,value\n1,1,0.5\n1,2,0.4\n2,1,0\n2,2,1\n");
        CHECK_THROWS_AS(csv::read_matrix(is), std::invalid_argument);
    }
}
