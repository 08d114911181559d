#include <stdio.h>
#include "homotest.h"

int main(void) {
    size_t src[] = {0, 1, 0, 3, 4, 3};
    size_t dst[] = {1, 2, 2, 4, 5, 5};
    size_t labels[] = {0, 0, 0, 1, 1, 1};
    HtGraph *g = NULL;
    if (ht_graph_from_edges(6, src, dst, 6, &g) != HT_STATUS_OK) {
        fprintf(stderr, "%s\n", ht_last_error_message());
        return 1;
    }
    double t = 0.0;
    if (ht_t_statistic(g, labels, 6, &t) != HT_STATUS_OK) {
        return 1;
    }
    HtReport *r = NULL;
    if (ht_labeled_bootstrap_test(g, labels, 6, HT_NULL_ER, 200, 0.05, 11, &r) != HT_STATUS_OK) {
        return 1;
    }
    printf("t=%.3f p=%.3f reject=%d\n", t, ht_report_p_value(r), (int)ht_report_reject(r));
    ht_report_free(r);
    ht_graph_free(g);
    return 0;
}
