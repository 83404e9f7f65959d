import matplotlib.pyplot as plt
import csv
rows = list(csv.DictReader(open('kg_divergence.csv')))
stats = sorted({r['stat'] for r in rows})
for stat in stats:
    pts = [(float(r['t']), float(r['value']))
           for r in rows if r['stat'] == stat]
    plt.semilogy([p[0] for p in pts],
                 [max(abs(p[1]), 1e-300) for p in pts], label=stat)
plt.xlabel('t'); plt.legend(); plt.title('twin-run divergence (KG)')
plt.savefig('kg_divergence.png')
