#include "doctest.h"
#include "dualbound/cli.hpp"
#include "dualbound/estimator.hpp"
#include "dualbound/primal.hpp"
#include "dualbound/reference.hpp"

TEST_SUITE("smoke") {
    TEST_CASE("headers link") {
        dualbound::ControlProblem pb = dualbound::make_problem("lq", 2);
        CHECK(pb.state_dim == 2);
    }
}
