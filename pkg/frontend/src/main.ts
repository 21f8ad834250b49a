import { setBaseUrl } from './api';
import { GridStore } from './store';
import { renderApp } from './view';

const root = document.getElementById('app');
if (root === null) throw new Error('missing #app mount point');

setBaseUrl(import.meta.env.VITE_API_URL ?? 'http://127.0.0.1:8321');

const store = new GridStore();
store.subscribe(() => renderApp(root, store));
renderApp(root, store);
void store.init();
