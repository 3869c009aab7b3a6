/* cc -I crates/ffi/include crates/ffi/examples/smoke.c target/debug/libqns_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include <string.h>

#include "qns.h"

int main(void) {
    QnsCounterexample *cx = NULL;
    if (qns_counterexample_new(2, 5, &cx) != QNS_STATUS_INVALID_ARGUMENT) return 1;
    printf("rejected: %s\n", qns_last_error());
    if (qns_counterexample_new(3, 5, &cx) != QNS_STATUS_OK) return 2;
    char *json = NULL;
    int32_t passed = 0;
    if (qns_counterexample_certify(cx, 1, 1, &json, &passed) != QNS_STATUS_OK) return 3;
    printf("passed=%d lens=%.7f report=%zu bytes\n", passed, qns_lens_constant(), strlen(json));
    qns_string_free(json);
    qns_counterexample_free(cx);
    return passed ? 0 : 4;
}
